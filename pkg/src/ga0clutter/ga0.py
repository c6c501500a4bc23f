"""The G_A^0(alpha, gamma, n) amplitude law.

Density, distribution function, quantiles, moments and sampling, plus a
moments-based fit. The distribution function is the Snedecor F CDF
``F_{2n,-2alpha}(-alpha z**2 / gamma)``, which reduces to the regularized
incomplete beta ``I_x(n, -alpha)`` at ``x = n z**2 / (n z**2 + gamma)``;
all evaluation goes through that beta form so both tails stay accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import numerics
from .errors import (
    DomainError,
    InfiniteMomentError,
    InfiniteQuantileError,
    NoMomentSolutionError,
)
from .numerics import RootBracket, find_root, ln_gamma

#: quantile() refuses probabilities above this; the result would be numerically infinite.
QUANTILE_CEILING = 1.0 - 1e-15


@dataclass(frozen=True)
class GA0Params:
    """Parameters of the law.

    Attributes:
        alpha: roughness, strictly negative.
        gamma: scale, strictly positive (squared-amplitude units).
        looks: number of looks ``n >= 1``.
    """

    alpha: float
    gamma: float = 1.0
    looks: int = 1

    def __post_init__(self):
        if not (self.alpha < 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be negative and finite, got {self.alpha!r}")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise DomainError(f"gamma must be positive and finite, got {self.gamma!r}")
        if int(self.looks) != self.looks or self.looks < 1:
            raise DomainError(f"looks must be an integer >= 1, got {self.looks!r}")
        object.__setattr__(self, "looks", int(self.looks))

    @property
    def simulation_valid(self) -> bool:
        """Finite variance, as required by the correlated-field method."""
        return self.alpha < -1

    def require_simulation_valid(self) -> None:
        if not self.simulation_valid:
            raise DomainError(
                f"alpha must be < -1 for a finite variance, got {self.alpha!r}"
            )

    def unit(self) -> "GA0Params":
        return replace(self, gamma=1.0)


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float


def _as_params(params) -> GA0Params:
    if not isinstance(params, GA0Params):
        raise DomainError(f"expected GA0Params, got {type(params).__name__}")
    return params


def _out(value):
    arr = np.asarray(value)
    return float(arr) if arr.ndim == 0 else arr


def pdf(params: GA0Params, z):
    """Density of the law; zero for ``z <= 0``."""
    p = _as_params(params)
    a, g, n = p.alpha, p.gamma, p.looks
    z = np.asarray(z, dtype=float)
    log_norm = (
        math.log(2.0) + n * math.log(n) + ln_gamma(n - a)
        - 0.5 * math.log(g) - ln_gamma(-a) - ln_gamma(n)
    )
    zp = np.where(z > 0, z, 1.0)
    with np.errstate(over="ignore"):
        logf = (
            log_norm
            + (2 * n - 1) * np.log(zp / math.sqrt(g))
            - (n - a) * np.log1p(n * zp * zp / g)
        )
        out = np.where(z > 0, np.exp(logf), 0.0)
    return _out(out)


def _beta_args(p: GA0Params, z: np.ndarray):
    """Return ``(x, 1 - x)`` for ``x = n z^2 / (n z^2 + gamma)``, each computed directly."""
    nz2 = p.looks * z * z
    den = nz2 + p.gamma
    return nz2 / den, p.gamma / den


def cdf(params: GA0Params, z):
    """Distribution function ``P(Z <= z)``."""
    p = _as_params(params)
    z = np.asarray(z, dtype=float)
    zp = np.where(z > 0, z, 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        x, y = _beta_args(p, zp)
    x = np.where(np.isinf(zp), 1.0, x)
    y = np.where(np.isinf(zp), 0.0, y)
    lower, _ = numerics.inc_beta_pair(float(p.looks), -p.alpha, x, y)
    return _out(np.where(z > 0, lower, 0.0))


def sf(params: GA0Params, z):
    """Survival function ``P(Z > z)``, accurate deep in the upper tail."""
    p = _as_params(params)
    z = np.asarray(z, dtype=float)
    zp = np.where(z > 0, z, 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        x, y = _beta_args(p, zp)
    x = np.where(np.isinf(zp), 1.0, x)
    y = np.where(np.isinf(zp), 0.0, y)
    _, upper = numerics.inc_beta_pair(float(p.looks), -p.alpha, x, y)
    return _out(np.where(z > 0, upper, 1.0))


def _unit_quantile(p: GA0Params, t: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Unit-scale quantile given ``t`` and its complement ``s = 1 - t``.

    The branch with the smaller probability is inverted, so the argument that
    was supplied exactly drives the computation.
    """
    n, b = float(p.looks), -p.alpha
    t, s = np.broadcast_arrays(t, s)
    low = t <= 0.5
    ratio = np.empty(t.shape)
    if low.any():
        x = np.asarray(numerics.inv_reg_inc_beta(n, b, t[low]))
        with np.errstate(divide="ignore"):
            ratio[low] = x / (n * (1.0 - x))
    if (~low).any():
        y = np.asarray(numerics.inv_reg_inc_beta(b, n, s[~low]))
        with np.errstate(divide="ignore"):
            ratio[~low] = (1.0 - y) / (n * y)
    return np.sqrt(ratio)


def quantile(params: GA0Params, t):
    """Inverse distribution function on ``[0, 1)``.

    Raises:
        InfiniteQuantileError: for ``t > 1 - 1e-15``.
    """
    p = _as_params(params)
    t = np.asarray(t, dtype=float)
    if np.any(t > QUANTILE_CEILING):
        raise InfiniteQuantileError(
            "quantile is numerically infinite for t > 1 - 1e-15; use isf() for tail work"
        )
    if np.any(~(t >= 0.0)):
        raise DomainError("quantile needs 0 <= t < 1")
    return _out(math.sqrt(p.gamma) * _unit_quantile(p, t, 1.0 - t))


def isf(params: GA0Params, s):
    """Inverse survival function: the ``z`` with ``P(Z > z) = s``, for ``0 < s <= 1``."""
    p = _as_params(params)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise InfiniteQuantileError("isf(0) is infinite")
    if np.any(~(s <= 1.0)):
        raise DomainError("isf needs 0 < s <= 1")
    return _out(math.sqrt(p.gamma) * _unit_quantile(p, 1.0 - s, s))


def from_gaussian(params: GA0Params, zeta, tail_floor: float = 0.0):
    """Map standard-normal values through ``Phi`` and then the quantile function.

    Both tails are carried as small probabilities (``Phi(zeta)`` below the
    median, ``Phi(-zeta)`` above it). Tail probabilities smaller than
    ``tail_floor`` are raised to it.

    Returns:
        ``(values, n_clamped)``
    """
    p = _as_params(params)
    zeta = np.asarray(zeta, dtype=float)
    low = zeta <= 0.0
    tail = np.where(low, numerics.normal_cdf(zeta), numerics.normal_sf(zeta))
    floor = max(tail_floor, np.finfo(float).tiny)
    clamped = ~low & (tail < floor)
    tail = np.where(clamped, floor, tail)
    t = np.where(low, tail, 1.0 - tail)
    s = np.where(low, 1.0 - tail, tail)
    values = math.sqrt(p.gamma) * _unit_quantile(p, t, s)
    return _out(values), int(np.count_nonzero(clamped))


def _log_unit_moment(alpha: float, looks: int, r: float) -> float:
    n = looks
    return (
        -0.5 * r * math.log(n)
        + ln_gamma(-alpha - r / 2) + ln_gamma(n + r / 2)
        - ln_gamma(-alpha) - ln_gamma(n)
    )


def moment(params: GA0Params, r: float) -> float:
    """``E[Z**r]``; finite only when ``alpha < -r/2``."""
    p = _as_params(params)
    if not r > 0:
        raise DomainError(f"moment order must be positive, got {r!r}")
    if not p.alpha < -r / 2:
        raise InfiniteMomentError(
            f"moment of order {r} is infinite for alpha = {p.alpha} (needs alpha < {-r / 2})"
        )
    return math.exp(0.5 * r * math.log(p.gamma) + _log_unit_moment(p.alpha, p.looks, r))


def moment_summary(params: GA0Params) -> MomentSummary:
    p = _as_params(params)
    if not p.alpha < -1:
        raise InfiniteMomentError(f"variance is infinite for alpha = {p.alpha}")
    mean = moment(p, 1)
    return MomentSummary(mean, moment(p, 2) - mean * mean)


def normalizing_scale(alpha: float, looks: int) -> float:
    """Scale ``gamma`` for which the law has mean exactly 1."""
    if not alpha < -1:
        raise DomainError(f"normalizing_scale needs alpha < -1, got {alpha!r}")
    if int(looks) != looks or looks < 1:
        raise DomainError(f"looks must be an integer >= 1, got {looks!r}")
    n = int(looks)
    log_c = ln_gamma(-alpha) + ln_gamma(n) - ln_gamma(-alpha - 0.5) - ln_gamma(n + 0.5)
    return n * math.exp(2.0 * log_c)


def uniform_open(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1): midpoints of the 2**-53 grid."""
    k = rng.integers(0, 2**53, size=size, dtype=np.int64)
    return (k.astype(float) + 0.5) * 2.0**-53


def sample_iid(params: GA0Params, count: int, seed: int) -> np.ndarray:
    """``count`` independent draws by inversion, deterministic in ``seed``."""
    p = _as_params(params)
    if int(count) != count or count < 1:
        raise DomainError(f"count must be a positive integer, got {count!r}")
    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
    # isf(V) has the same law as quantile(V) and never hits the infinite end.
    return np.asarray(isf(p, uniform_open(rng, int(count))))


# Search interval for the roughness in the moments fit.
FIT_ALPHA_MIN = -200.0
FIT_ALPHA_MAX = -1.0 - 1e-6


def _moment_ratio(alpha: float, looks: int) -> float:
    """Scale-free ``E[Z]**2 / E[Z**2]``, increasing in ``-alpha``."""
    return math.exp(2 * _log_unit_moment(alpha, looks, 1) - _log_unit_moment(alpha, looks, 2))


def fit_from_moments(m1: float, m2: float, looks: int) -> GA0Params:
    """Solve ``E[Z] = m1`` and ``E[Z**2] = m2`` for ``(alpha, gamma)`` at fixed looks."""
    if int(looks) != looks or looks < 1:
        raise DomainError(f"looks must be an integer >= 1, got {looks!r}")
    looks = int(looks)
    if not (m1 > 0 and m2 > 0 and math.isfinite(m2)):
        raise NoMomentSolutionError(f"moments must be finite and positive, got {m1}, {m2}")
    target = m1 * m1 / m2
    lo_r = _moment_ratio(FIT_ALPHA_MAX, looks)
    hi_r = _moment_ratio(FIT_ALPHA_MIN, looks)
    if not lo_r < target < hi_r:
        raise NoMomentSolutionError(
            f"moment ratio {target:.6g} outside attainable range ({lo_r:.6g}, {hi_r:.6g})"
        )

    def f(alpha):
        return _moment_ratio(alpha, looks) - target

    alpha = find_root(f, RootBracket.around(f, FIT_ALPHA_MIN, FIT_ALPHA_MAX), tol=1e-12)
    unit_mean = math.exp(_log_unit_moment(alpha, looks, 1))
    return GA0Params(alpha, (m1 / unit_mean) ** 2, looks)


def fit_moments(amplitudes, looks: int) -> GA0Params:
    """Moments estimator from a sample of positive amplitudes."""
    z = np.asarray(amplitudes, dtype=float).ravel()
    if z.size < 2 or np.any(~np.isfinite(z)) or np.any(z <= 0):
        raise NoMomentSolutionError("need at least two finite positive amplitudes")
    return fit_from_moments(float(np.mean(z)), float(np.mean(z * z)), looks)


# Single-look closed forms (n = 1).

def single_look_pdf(alpha: float, gamma: float, z):
    z = np.asarray(z, dtype=float)
    zp = np.where(z > 0, z, 0.0)
    out = -2.0 * alpha * gamma ** (-alpha) * zp * (gamma + zp * zp) ** (alpha - 1.0)
    return _out(np.where(z > 0, out, 0.0))


def single_look_cdf(alpha: float, gamma: float, z):
    z = np.asarray(z, dtype=float)
    zp = np.where(z > 0, z, 0.0)
    return _out(np.where(z > 0, 1.0 - (1.0 + zp * zp / gamma) ** alpha, 0.0))


def single_look_quantile(alpha: float, gamma: float, t):
    t = np.asarray(t, dtype=float)
    return _out(np.sqrt(gamma * ((1.0 - t) ** (1.0 / alpha) - 1.0)))
