"""Correlated G_A^0 clutter on an N x N torus.

Pipeline: target correlation ``rho`` -> Gaussian correlation ``tau`` (pointwise
inverse transfer map) -> spectral mask ``psi = sqrt(DFT(tau) / N^2)`` ->
white noise ``xi`` -> ``zeta = N * IDFT(psi * DFT(xi))`` -> ``G^-1(Phi(zeta))``.

DFT here is the unnormalized forward transform with per-axis kernel
``exp(-2 pi i k k1 / N)`` and IDFT its inverse with the 1/N^2 factor, i.e.
``numpy``/``scipy.fft`` conventions. With ``theta = N * IDFT(psi)`` the
circular self-convolution of ``theta`` is exactly ``tau``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import fft

from . import ga0
from .corr_map import (
    DEFAULT_GRID_SIZE,
    DEFAULT_ORDER,
    CorrMapKey,
    build_lookup,
    tau_of_rho,
)
from .errors import (
    DomainError,
    GA0Error,
    InfeasibleCorrelationError,
    InvalidCorrelationStructureError,
    NormalizationError,
)
from .ga0 import GA0Params, uniform_open
from .numerics import normal_ppf

MASK_CLAMP = 1e-9
IMAG_TOL = 1e-8
TAIL_FLOOR = 1e-15


SPECTRUM_POLICIES = ("strict", "clip")


class ClampWarning(UserWarning):
    """Some Gaussian values were so extreme that Phi rounded to 1."""


class SpectrumClipWarning(UserWarning):
    """Negative spectral mass was discarded under the ``clip`` policy."""


def _check_size(size: int) -> int:
    if int(size) != size or size < 4 or size % 2:
        raise DomainError(f"grid size must be an even integer >= 4, got {size!r}")
    return int(size)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _reflect(a: np.ndarray) -> np.ndarray:
    """``a[(-k) mod N, (-l) mod N]``."""
    return np.roll(a[::-1, ::-1], 1, axis=(0, 1))


@dataclass(frozen=True)
class CorrelationGrid:
    """Target correlation at every lag of the torus, ``rho[k, l]``."""

    size: int
    rho: np.ndarray

    def __post_init__(self):
        n = _check_size(self.size)
        rho = _frozen(self.rho)
        if rho.shape != (n, n):
            raise DomainError(f"rho must be {n}x{n}, got {rho.shape}")
        if rho[0, 0] != 1.0:
            raise DomainError("rho(0,0) must be 1")
        if np.any(~(np.abs(rho) <= 1.0)):
            raise DomainError("correlation values must lie in [-1, 1]")
        if not np.array_equal(rho, rho[_fold(n)][:, _fold(n)]):
            raise DomainError("rho must satisfy rho(k,l) = rho(N-k,l) = rho(k,N-l)")
        object.__setattr__(self, "rho", rho)


@dataclass(frozen=True)
class TauGrid:
    size: int
    tau: np.ndarray


@dataclass(frozen=True)
class SpectralMask:
    """``psi`` on the frequency grid; ``clipped_mass`` is the discarded negative mass."""

    size: int
    psi: np.ndarray
    clipped_mass: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class FieldGrid:
    size: int
    values: np.ndarray
    clamped: int = field(default=0, compare=False)


def _fold(n: int) -> np.ndarray:
    """Index map ``k -> min(k, N - k)``."""
    k = np.arange(n)
    return np.minimum(k, n - k)


def extend_rho(base, size: int) -> CorrelationGrid:
    """Extend ``rho`` given on ``{0..N/2}^2`` to the whole torus by reflection.

    A full ``N x N`` array is also accepted; only its quarter-grid is read, so
    an already symmetric grid comes back unchanged.
    """
    n = size
    if int(n) != n or n < 4 or n % 2:
        raise DomainError(f"grid size must be an even integer >= 4, got {size!r}")
    base = np.asarray(base, dtype=float)
    h = n // 2 + 1
    if base.shape not in ((h, h), (n, n)):
        raise DomainError(f"base must be {h}x{h} (or {n}x{n}), got {base.shape}")
    quarter = base[:h, :h]
    if quarter[0, 0] != 1.0:
        raise DomainError("rho(0,0) must be 1")
    off = quarter.copy()
    off[0, 0] = 0.0
    if np.any(~(np.abs(off) < 1.0)):
        bad = tuple(int(i) for i in np.argwhere(~(np.abs(off) < 1.0))[0])
        raise DomainError(f"rho{bad} = {quarter[bad]!r}: off-origin values must lie in (-1, 1)")
    f = _fold(n)
    return CorrelationGrid(n, quarter[f][:, f])


def tau_grid(corr: CorrelationGrid, key: CorrMapKey, lookup=None,
             grid_size: int = DEFAULT_GRID_SIZE, quadrature_order: int = DEFAULT_ORDER,
             workers: int = 1) -> TauGrid:
    """Pointwise inverse transfer map; ``tau(0,0) = 1``.

    Raises:
        InfeasibleCorrelationError: listing every lag whose target is unattainable.
    """
    if lookup is None:
        lookup = build_lookup(key, grid_size, quadrature_order, workers)
    rng = lookup.feasible
    rho = corr.rho
    off = np.ones_like(rho, dtype=bool)
    off[0, 0] = False
    bad = off & ((rho < rng.rho_min) | (rho > rng.rho_max))
    if bad.any():
        lags = [tuple(int(i) for i in ix) for ix in np.argwhere(bad)]
        shown = ", ".join(f"({k},{l})={rho[k, l]:.4f}" for k, l in lags[:12])
        more = f" and {len(lags) - 12} more" if len(lags) > 12 else ""
        raise InfeasibleCorrelationError(
            f"{len(lags)} lag(s) outside the feasible range "
            f"[{rng.rho_min:.6f}, {rng.rho_max:.6f}] for alpha={key.alpha:g}, n={key.looks}: "
            f"{shown}{more}",
            rng.rho_min, rng.rho_max, lags,
        )
    values = rho[off]
    uniq, inverse = np.unique(values, return_inverse=True)
    solved = np.array([tau_of_rho(key, r, lookup) for r in uniq])
    tau = np.ones_like(rho)
    tau[off] = solved[inverse]
    return TauGrid(corr.size, _frozen(tau))


def spectral_mask(tau: TauGrid, workers: int = 1, policy: str = "strict") -> SpectralMask:
    """``psi = sqrt(DFT(tau) / N^2)`` with roundoff-level negatives clamped to 0.

    Under ``policy="clip"`` all negative spectral values are dropped and the
    rest rescaled to sum to 1, which projects ``tau`` onto the nearest valid
    structure with unit variance; the marginal law is unaffected but the
    realized correlations differ from ``tau``.

    Raises:
        InvalidCorrelationStructureError: under ``"strict"``, a spectral value
            below ``-1e-9``.
    """
    if policy not in SPECTRUM_POLICIES:
        raise DomainError(f"unknown spectrum policy {policy!r}")
    n = tau.size
    transform = fft.fft2(tau.tau, workers=workers) / (n * n)
    if np.max(np.abs(transform.imag)) > MASK_CLAMP:
        raise InvalidCorrelationStructureError(
            "correlation grid is not reflection symmetric (complex spectrum)"
        )
    re = transform.real
    # Exact (-k, -l) symmetry: a + b == b + a bitwise.
    re = 0.5 * (re + _reflect(re))
    worst = float(re.min())
    clipped = 0.0
    if worst < -MASK_CLAMP:
        if policy == "strict":
            k, l = (int(i) for i in np.unravel_index(np.argmin(re), re.shape))
            negative = float(-re[re < 0].sum())
            raise InvalidCorrelationStructureError(
                f"Gaussian correlation grid is not nonnegative definite: spectrum at ({k},{l}) "
                f"is {worst:.3e}, total negative mass {negative:.4f}"
            )
        clipped = float(-re[re < 0].sum())
        re = np.maximum(re, 0.0)
        re = re / re.sum()
        warnings.warn(
            f"discarded negative spectral mass {clipped:.4f}; realized correlations will "
            "differ from the target", SpectrumClipWarning, stacklevel=2,
        )
    psi = np.sqrt(np.maximum(re, 0.0))
    return SpectralMask(n, _frozen(psi), clipped)


def filter_kernel(mask: SpectralMask, workers: int = 1) -> np.ndarray:
    """Spatial filter ``theta = N * IDFT(psi)`` (real)."""
    theta = mask.size * fft.ifft2(mask.psi, workers=workers)
    return theta.real


def white_noise(size: int, seed: int) -> FieldGrid:
    """Standard normal grid, row-major, by inversion of open-interval uniforms."""
    if int(size) != size or size < 1:
        raise DomainError(f"size must be a positive integer, got {size!r}")
    size = int(size)
    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
    xi = normal_ppf(uniform_open(rng, size * size)).reshape(size, size)
    return FieldGrid(size, _frozen(xi))


def correlated_gaussian(mask: SpectralMask, noise: FieldGrid, workers: int = 1) -> FieldGrid:
    """``zeta = N * IDFT(psi * DFT(xi))``: standard normal with correlation ``tau``.

    Raises:
        NormalizationError: imaginary residue above 1e-8.
    """
    if mask.size != noise.size:
        raise DomainError(f"mask size {mask.size} != noise size {noise.size}")
    n = mask.size
    z = n * fft.ifft2(mask.psi * fft.fft2(noise.values, workers=workers), workers=workers)
    residue = float(np.max(np.abs(z.imag)))
    if residue > IMAG_TOL:
        raise NormalizationError(f"imaginary residue {residue:.3e} after filtering")
    return FieldGrid(n, _frozen(z.real))


def to_clutter(zeta: FieldGrid, params: GA0Params) -> FieldGrid:
    """Pointwise ``sqrt(gamma) * G^-1(Phi(zeta); alpha, 1, n)``.

    Upper-tail probabilities below 1e-15 (``Phi`` indistinguishable from 1)
    are clamped there; the count is reported via ``ClampWarning`` and
    ``FieldGrid.clamped``.
    """
    params.require_simulation_valid()
    unit, clamped = ga0.from_gaussian(params.unit(), zeta.values, tail_floor=TAIL_FLOOR)
    values = np.sqrt(params.gamma) * np.asarray(unit)
    if clamped:
        warnings.warn(f"{clamped} pixel(s) clamped at Phi = 1 - 1e-15", ClampWarning,
                      stacklevel=2)
    return FieldGrid(zeta.size, _frozen(values), clamped)


@dataclass(frozen=True)
class SimulationConfig:
    params: GA0Params
    corr: CorrelationGrid
    seed: int = 0
    quadrature_order: int = DEFAULT_ORDER
    lookup_size: int = DEFAULT_GRID_SIZE
    workers: int = 1
    spectrum: str = "strict"

    def __post_init__(self):
        self.params.require_simulation_valid()
        _check_size(self.corr.size)
        if self.spectrum not in SPECTRUM_POLICIES:
            raise DomainError(f"unknown spectrum policy {self.spectrum!r}")

    @property
    def key(self) -> CorrMapKey:
        return CorrMapKey(self.params.alpha, self.params.looks)


class SimulationStages(NamedTuple):
    tau: TauGrid
    mask: SpectralMask
    noise: FieldGrid
    zeta: FieldGrid
    clutter: FieldGrid


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except GA0Error as exc:
        exc.stage = name
        raise


def simulate_stages(config: SimulationConfig) -> SimulationStages:
    """Run the whole pipeline and keep every intermediate grid.

    Errors raised by a stage carry its name in ``exc.stage``.
    """
    w = config.workers
    key = config.key
    lookup = _stage("lookup", build_lookup, key, config.lookup_size, config.quadrature_order, w)
    tau = _stage("tau_grid", tau_grid, config.corr, key, lookup)
    mask = _stage("spectral_mask", spectral_mask, tau, w, config.spectrum)
    noise = _stage("white_noise", white_noise, config.corr.size, config.seed)
    zeta = _stage("correlated_gaussian", correlated_gaussian, mask, noise, w)
    clutter = _stage("to_clutter", to_clutter, zeta, config.params)
    return SimulationStages(tau, mask, noise, zeta, clutter)


def simulate(config: SimulationConfig) -> FieldGrid:
    """Correlated G_A^0 clutter field for ``config``; deterministic in the seed."""
    return simulate_stages(config).clutter
