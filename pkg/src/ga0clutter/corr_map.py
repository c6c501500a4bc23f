"""Correlation transfer between the Gaussian field and the G_A^0 field.

If ``(U, V)`` are standard normal with correlation ``tau`` and ``g`` maps a
standard normal onto a unit-scale G_A^0 variable through ``Phi`` and the
quantile function, then ``rho_of_tau`` is the correlation of ``g(U)`` and
``g(V)``. ``tau_of_rho`` inverts it. The cross moment ``E[g(U) g(V)]`` is a
tensor Gauss-Hermite sum after writing ``V = tau U + sqrt(1 - tau^2) W``.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import ga0
from .errors import (
    DomainError,
    InfeasibleCorrelationError,
    NearSingularError,
    QuadratureConsistencyError,
)
from .numerics import RootBracket, find_root, gauss_hermite

DEFAULT_ORDER = 64
DEFAULT_GRID_SIZE = 129
EDGE_DELTA = 1e-4
MAX_ABS_TAU = 1.0 - 1e-6
RHO_TOLERANCE = 5e-4


@dataclass(frozen=True)
class CorrMapKey:
    alpha: float
    looks: int = 1

    def __post_init__(self):
        if not (self.alpha < -1 and math.isfinite(self.alpha)):
            raise DomainError(
                f"correlation map needs alpha < -1 (finite variance), got {self.alpha!r}"
            )
        if int(self.looks) != self.looks or self.looks < 1:
            raise DomainError(f"looks must be an integer >= 1, got {self.looks!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "looks", int(self.looks))

    @property
    def params(self) -> ga0.GA0Params:
        return ga0.GA0Params(self.alpha, 1.0, self.looks)

    @property
    def mean_squared(self) -> float:
        """Square of the unit-scale mean, i.e. ``R(0)``."""
        return ga0.moment(self.params, 1) ** 2

    @property
    def second_moment(self) -> float:
        """Unit-scale ``E[Z^2] = -1/(1 + alpha)``, i.e. the limit ``R(1-)``."""
        return -1.0 / (1.0 + self.alpha)


@dataclass(frozen=True)
class FeasibleRange:
    rho_min: float
    rho_max: float

    def __contains__(self, rho) -> bool:
        return self.rho_min <= rho <= self.rho_max


@dataclass(frozen=True)
class CorrLookup:
    """Tabulated ``rho_of_tau`` on an increasing tau grid; read-only."""

    key: CorrMapKey
    taus: np.ndarray
    rhos: np.ndarray
    quadrature_order: int

    @property
    def feasible(self) -> FeasibleRange:
        return FeasibleRange(float(self.rhos[0]), float(self.rhos[-1]))


class _Transfer:
    """Gauss-Hermite machinery for one key and quadrature order."""

    def __init__(self, key: CorrMapKey, order: int):
        rule = gauss_hermite(order)
        w = rule.weights / math.sqrt(math.pi)
        keep = w > 0
        self.key = key
        self.u = math.sqrt(2.0) * rule.nodes[keep]
        self.w = w[keep]
        self.g_u, _ = ga0.from_gaussian(key.params, self.u)
        self.ww = np.outer(self.w * self.g_u, self.w)

    def cross_moments(self, taus: np.ndarray) -> np.ndarray:
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        c = np.sqrt(1.0 - taus * taus)
        v = taus[:, None, None] * self.u[None, :, None] + c[:, None, None] * self.u[None, None, :]
        g_v, _ = ga0.from_gaussian(self.key.params, v)
        return np.einsum("ij,tij->t", self.ww, g_v)


@functools.lru_cache(maxsize=64)
def _transfer(key: CorrMapKey, order: int) -> _Transfer:
    return _Transfer(key, order)


def _check_tau(tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(~(np.abs(tau) <= MAX_ABS_TAU)):
        raise NearSingularError(
            f"|tau| must be <= 1 - 1e-6 for the bivariate normal density, got {tau}"
        )
    return tau


def _out(value):
    arr = np.asarray(value)
    return float(arr) if arr.ndim == 0 else arr


def cross_moment(key: CorrMapKey, tau, order: int = DEFAULT_ORDER):
    """``E[g(U) g(V)]`` for unit-scale G_A^0 marginals and Gaussian correlation ``tau``."""
    tau = _check_tau(tau)
    out = _transfer(key, order).cross_moments(tau.ravel()).reshape(tau.shape)
    return _out(out)


def rho_of_tau(key: CorrMapKey, tau, order: int = DEFAULT_ORDER):
    """Correlation of the transformed pair, using closed-form unit moments."""
    r = np.asarray(cross_moment(key, tau, order))
    mu2 = key.mean_squared
    return _out((r - mu2) / (key.second_moment - mu2))


def feasible_range(key: CorrMapKey, order: int = DEFAULT_ORDER,
                   delta: float = EDGE_DELTA) -> FeasibleRange:
    lo, hi = rho_of_tau(key, np.array([-1.0 + delta, 1.0 - delta]), order)
    return FeasibleRange(float(lo), float(hi))


def lookup_grid(grid_size: int, delta: float = EDGE_DELTA) -> np.ndarray:
    """Chebyshev-Lobatto points scaled onto ``[-1 + delta, 1 - delta]``."""
    j = np.arange(grid_size)
    taus = -np.cos(np.pi * j / (grid_size - 1)) * (1.0 - delta)
    if grid_size % 2:
        taus[grid_size // 2] = 0.0
    return taus


def build_lookup(key: CorrMapKey, grid_size: int = DEFAULT_GRID_SIZE,
                 quadrature_order: int = DEFAULT_ORDER, workers: int = 1) -> CorrLookup:
    """Tabulate ``rho_of_tau`` on a Chebyshev grid. Results are cached.

    Raises:
        QuadratureConsistencyError: tabulated values are not strictly increasing
            (the quadrature order is too low for this key).
    """
    if grid_size < 33:
        raise DomainError(f"grid_size must be >= 33, got {grid_size}")
    if quadrature_order < 32:
        raise DomainError(f"quadrature_order must be >= 32, got {quadrature_order}")
    return _build_lookup(key, int(grid_size), int(quadrature_order), max(1, int(workers)))


# Keyed by (alpha, looks, quadrature order, grid size).
_LOOKUPS: dict[tuple, CorrLookup] = {}


def _build_lookup(key, grid_size, order, workers):
    cache_key = (key.alpha, key.looks, order, grid_size)
    found = _LOOKUPS.get(cache_key)
    if found is not None:
        return found
    taus = lookup_grid(grid_size)
    transfer = _transfer(key, order)
    # Chunks are fixed by grid size alone; each value is computed independently.
    chunks = np.array_split(taus, max(1, grid_size // 16))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(transfer.cross_moments, chunks))
    else:
        parts = [transfer.cross_moments(c) for c in chunks]
    r = np.concatenate(parts)
    mu2 = key.mean_squared
    rhos = (r - mu2) / (key.second_moment - mu2)
    if np.any(np.diff(rhos) <= 0):
        bad = int(np.argmin(np.diff(rhos)))
        raise QuadratureConsistencyError(
            f"tabulated correlation map for {key} is not increasing near tau={taus[bad]:.6f}; "
            f"raise the quadrature order (now {order})"
        )
    taus.setflags(write=False)
    rhos.setflags(write=False)
    lookup = CorrLookup(key, taus, rhos, order)
    _LOOKUPS[cache_key] = lookup
    return lookup


def clear_cache() -> None:
    _LOOKUPS.clear()
    _transfer.cache_clear()


def _infeasible(rho, rng: FeasibleRange, key: CorrMapKey) -> InfeasibleCorrelationError:
    return InfeasibleCorrelationError(
        f"rho={rho:.6g} is not attainable for alpha={key.alpha:g}, n={key.looks}: "
        f"feasible range is [{rng.rho_min:.6f}, {rng.rho_max:.6f}]",
        rng.rho_min, rng.rho_max,
    )


def tau_of_rho(key: CorrMapKey, rho: float, lookup: CorrLookup | None = None,
               tol: float = 1e-10) -> float:
    """Gaussian correlation that produces G_A^0 correlation ``rho``.

    ``rho = +/-1`` maps to ``tau = +/-1`` by convention. Otherwise the
    lookup table brackets the root and Brent's method refines it on the
    exact map.

    Raises:
        InfeasibleCorrelationError: ``rho`` outside ``lookup.feasible``.
    """
    rho = float(rho)
    if rho in (-1.0, 1.0):
        return rho
    if not -1.0 < rho < 1.0:
        raise DomainError(f"rho must lie in [-1, 1], got {rho}")
    if lookup is None:
        lookup = build_lookup(key)
    elif lookup.key != key:
        raise DomainError("lookup was built for a different key")
    rng = lookup.feasible
    if rho not in rng:
        raise _infeasible(rho, rng, key)
    taus, rhos = lookup.taus, lookup.rhos
    i = int(np.searchsorted(rhos, rho, side="right")) - 1
    i = min(max(i, 0), len(taus) - 2)
    if rhos[i] == rho:
        return float(taus[i])
    if rhos[i + 1] == rho:
        return float(taus[i + 1])
    order = lookup.quadrature_order

    def f(t):
        return rho_of_tau(key, t, order) - rho

    bracket = RootBracket(float(taus[i]), float(taus[i + 1]),
                          float(rhos[i] - rho), float(rhos[i + 1] - rho))
    return find_root(f, bracket, tol=tol)


def tau_of_rho_many(key: CorrMapKey, rhos, lookup: CorrLookup | None = None) -> np.ndarray:
    """Vectorised ``tau_of_rho``; each distinct value is solved once."""
    rhos = np.asarray(rhos, dtype=float)
    if lookup is None:
        lookup = build_lookup(key)
    uniq, inverse = np.unique(rhos, return_inverse=True)
    solved = np.array([tau_of_rho(key, r, lookup) for r in uniq])
    return solved[inverse].reshape(rhos.shape)
