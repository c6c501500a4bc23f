"""Special functions, quadrature and root finding.

Everything here is domain-free and works on scalars or numpy arrays
(scalars in, Python floats out). Gamma-function ratios are formed in log
space; the incomplete beta function is evaluated with the Lentz continued
fraction, switching to the complementary form past ``x = (a+1)/(a+b+2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import BracketError, DomainError, InfiniteQuantileError

_EPS = np.finfo(float).eps
_FPMIN = 1e-300
_CF_MAXIT = 1000
_CF_TOL = 1e-16


def _out(value):
    arr = np.asarray(value)
    return float(arr) if arr.ndim == 0 else arr


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0 or math.isinf(x):
        raise DomainError(f"ln_gamma needs a finite positive argument, got {x!r}")
    return math.lgamma(x)


def ln_beta(a: float, b: float) -> float:
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)


def _check_shape_params(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)) or np.any(~np.isfinite(a)) or np.any(~np.isfinite(b)):
        raise DomainError("beta shape parameters must be finite and positive")
    return a, b


def _lbeta(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == 0 and b.ndim == 0:
        return np.asarray(ln_beta(float(a), float(b)))
    a, b = np.broadcast_arrays(a, b)
    if a.size and np.all(a == a.flat[0]) and np.all(b == b.flat[0]):
        return np.full(a.shape, ln_beta(float(a.flat[0]), float(b.flat[0])))
    lg = np.vectorize(math.lgamma, otypes=[float])
    return lg(a) + lg(b) - lg(a + b)


def _betacf(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Continued fraction for I_x(a, b), modified Lentz, on 1-d arrays."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    active = np.arange(x.size)
    for m in range(1, _CF_MAXIT + 1):
        aa_, bb_, xx = a[active], b[active], x[active]
        qa, qp, qm = qab[active], qap[active], qam[active]
        cc, dd = c[active], d[active]
        m2 = 2 * m
        coef = m * (bb_ - m) * xx / ((qm + m2) * (aa_ + m2))
        dd = 1.0 + coef * dd
        dd = np.where(np.abs(dd) < _FPMIN, _FPMIN, dd)
        cc = 1.0 + coef / cc
        cc = np.where(np.abs(cc) < _FPMIN, _FPMIN, cc)
        dd = 1.0 / dd
        hh = h[active] * dd * cc
        coef = -(aa_ + m) * (qa + m) * xx / ((aa_ + m2) * (qp + m2))
        dd = 1.0 + coef * dd
        dd = np.where(np.abs(dd) < _FPMIN, _FPMIN, dd)
        cc = 1.0 + coef / cc
        cc = np.where(np.abs(cc) < _FPMIN, _FPMIN, cc)
        dd = 1.0 / dd
        delta = dd * cc
        h[active] = hh * delta
        c[active] = cc
        d[active] = dd
        keep = np.abs(delta - 1.0) >= _CF_TOL
        if not keep.any():
            return h
        active = active[keep]
    raise RuntimeError("incomplete beta continued fraction did not converge")


def inc_beta_pair(a, b, x, y):
    """Return ``(I_x(a,b), 1 - I_x(a,b))`` with ``y = 1 - x`` supplied exactly.

    The smaller of the two is computed directly, so both tails keep full
    relative accuracy.
    """
    a, b, x, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, x, y)))
    shape = x.shape
    a, b, x, y = (v.ravel() for v in (a, b, x, y))
    p = np.zeros(x.size)
    q = np.ones(x.size)
    at_one = y <= 0.0
    p[at_one], q[at_one] = 1.0, 0.0
    inner = (x > 0.0) & ~at_one
    if inner.any():
        ai, bi, xi, yi = a[inner], b[inner], x[inner], y[inner]
        front = np.exp(ai * np.log(xi) + bi * np.log(yi) - _lbeta(ai, bi))
        swap = xi > (ai + 1.0) / (ai + bi + 2.0)
        small = np.empty(xi.size)
        if (~swap).any():
            ns = ~swap
            small[ns] = front[ns] * _betacf(ai[ns], bi[ns], xi[ns]) / ai[ns]
        if swap.any():
            small[swap] = front[swap] * _betacf(bi[swap], ai[swap], yi[swap]) / bi[swap]
        small = np.clip(small, 0.0, 1.0)
        pi = np.where(swap, 1.0 - small, small)
        qi = np.where(swap, small, 1.0 - small)
        p[inner], q[inner] = pi, qi
    return p.reshape(shape), q.reshape(shape)


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    a, b = _check_shape_params(a, b)
    x = np.asarray(x, dtype=float)
    if np.any(~((x >= 0.0) & (x <= 1.0))):
        raise DomainError("reg_inc_beta needs 0 <= x <= 1")
    p, _ = inc_beta_pair(a, b, x, 1.0 - x)
    return _out(p)


def _initial_guess(a, b, p):
    # Numerical Recipes (3rd ed.) starting values for invbetai.
    out = np.empty_like(p)
    big = (a >= 1.0) & (b >= 1.0)
    if big.any():
        aa, bb, pb = a[big], b[big], p[big]
        pp = np.where(pb < 0.5, pb, 1.0 - pb)
        t = np.sqrt(-2.0 * np.log(pp))
        xg = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        xg = np.where(pb < 0.5, -xg, xg)
        al = (xg * xg - 3.0) / 6.0
        h = 2.0 / (1.0 / (2.0 * aa - 1.0) + 1.0 / (2.0 * bb - 1.0))
        w = xg * np.sqrt(al + h) / h - (1.0 / (2.0 * bb - 1.0) - 1.0 / (2.0 * aa - 1.0)) * (
            al + 5.0 / 6.0 - 2.0 / (3.0 * h)
        )
        out[big] = aa / (aa + bb * np.exp(np.minimum(2.0 * w, 700.0)))
    if (~big).any():
        aa, bb, pb = a[~big], b[~big], p[~big]
        lna = np.log(aa / (aa + bb))
        lnb = np.log(bb / (aa + bb))
        t = np.exp(aa * lna) / aa
        u = np.exp(bb * lnb) / bb
        w = t + u
        out[~big] = np.where(
            pb < t / w,
            np.power(aa * w * pb, 1.0 / aa),
            1.0 - np.power(bb * w * (1.0 - pb), 1.0 / bb),
        )
    return np.clip(out, 1e-300, 1.0 - _EPS)


def _inv_ibeta(a, b, p):
    """Solve I_x(a,b) = p on 1-d arrays; accurate for p <= 1/2."""
    x = _initial_guess(a, b, p)
    lo = np.zeros_like(x)
    hi = np.ones_like(x)
    lbeta = _lbeta(a, b)
    if lbeta.ndim == 0:
        lbeta = np.full_like(x, float(lbeta))
    active = np.arange(x.size)
    for _ in range(200):
        xa, aa, ba, pa = x[active], a[active], b[active], p[active]
        px, _q = inc_beta_pair(aa, ba, xa, 1.0 - xa)
        err = px - pa
        lo[active] = np.where(err < 0.0, xa, lo[active])
        hi[active] = np.where(err > 0.0, xa, hi[active])
        lpdf = (aa - 1.0) * np.log(xa) + (ba - 1.0) * np.log1p(-xa) - lbeta[active]
        dens = np.exp(lpdf)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            u = err / dens
            curv = (aa - 1.0) / xa - (ba - 1.0) / (1.0 - xa)
            step = u / (1.0 - 0.5 * np.minimum(1.0, u * curv))
        step = np.where(np.isfinite(step), step, 0.0)
        xn = xa - step
        la, ha = lo[active], hi[active]
        xn = np.where(xn <= la, 0.5 * (xa + la), xn)
        xn = np.where(xn >= ha, 0.5 * (xa + ha), xn)
        x[active] = xn
        done = (err == 0.0) | (np.abs(xn - xa) <= 2.0 * _EPS * xa) | (ha - la <= 2.0 * _EPS * la)
        active = active[~done]
        if active.size == 0:
            break
    return x


def inv_reg_inc_beta(a, b, p):
    """Inverse of ``reg_inc_beta`` in its third argument.

    For ``p > 1/2`` the complementary problem ``I_{1-x}(b, a) = 1 - p`` is
    solved instead, which keeps the upper tail accurate.
    """
    a, b = _check_shape_params(a, b)
    p = np.asarray(p, dtype=float)
    if np.any(~((p >= 0.0) & (p <= 1.0))):
        raise DomainError("inv_reg_inc_beta needs 0 <= p <= 1")
    a, b, p = np.broadcast_arrays(a, b, p)
    shape = p.shape
    a, b, p = a.ravel().copy(), b.ravel().copy(), p.ravel().copy()
    x = np.where(p >= 1.0, 1.0, 0.0)
    inner = (p > 0.0) & (p < 1.0)
    lower = inner & (p <= 0.5)
    upper = inner & (p > 0.5)
    if lower.any():
        x[lower] = _inv_ibeta(a[lower], b[lower], p[lower])
    if upper.any():
        x[upper] = 1.0 - _inv_ibeta(b[upper], a[upper], 1.0 - p[upper])
    return _out(x.reshape(shape))


def f_cdf(nu1, nu2, x):
    """CDF of Snedecor's F distribution with (nu1, nu2) degrees of freedom."""
    nu1, nu2 = _check_shape_params(nu1, nu2)
    x = np.asarray(x, dtype=float)
    xp = np.where(x > 0.0, x, 0.0)
    with np.errstate(invalid="ignore", over="ignore"):
        den = nu1 * xp + nu2
        u = np.where(np.isinf(xp), 1.0, nu1 * xp / den)
        v = np.where(np.isinf(xp), 0.0, nu2 / den)
    p, _ = inc_beta_pair(nu1 / 2.0, nu2 / 2.0, u, v)
    return _out(np.where(x > 0.0, p, 0.0))


def f_quantile(nu1, nu2, p):
    """Inverse of ``f_cdf``; ``p == 1`` raises ``InfiniteQuantileError``."""
    nu1, nu2 = _check_shape_params(nu1, nu2)
    p = np.asarray(p, dtype=float)
    if np.any(p >= 1.0):
        raise InfiniteQuantileError("F quantile at p = 1 is infinite")
    if np.any(~(p >= 0.0)):
        raise DomainError("f_quantile needs 0 <= p < 1")
    a, b = nu1 / 2.0, nu2 / 2.0
    a, b, p = np.broadcast_arrays(a, b, p)
    low = p <= 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.asarray(inv_reg_inc_beta(a, b, np.where(low, p, 0.0)))
        y = np.asarray(inv_reg_inc_beta(b, a, np.where(low, 0.5, 1.0 - p)))
        out = np.where(low, (b * x) / (a * (1.0 - x)), (b * (1.0 - y)) / (a * y))
    return _out(out)


def normal_cdf(x):
    """Standard normal CDF."""
    return _out(special.ndtr(np.asarray(x, dtype=float)))


def normal_sf(x):
    """Standard normal survival function, ``1 - normal_cdf(x)`` without cancellation."""
    return _out(special.ndtr(-np.asarray(x, dtype=float)))


def normal_ppf(p):
    """Inverse of the standard normal CDF."""
    return _out(special.ndtri(np.asarray(p, dtype=float)))


@dataclass(frozen=True)
class QuadratureRule:
    order: int
    nodes: np.ndarray
    weights: np.ndarray


def gauss_hermite(order: int) -> QuadratureRule:
    """Physicists' Gauss-Hermite rule for the weight ``exp(-t**2)``."""
    if int(order) != order or order < 2:
        raise DomainError(f"Gauss-Hermite order must be an integer >= 2, got {order!r}")
    nodes, weights = np.polynomial.hermite.hermgauss(int(order))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(int(order), nodes, weights)


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise BracketError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.f_lo * self.f_hi > 0 or math.isnan(self.f_lo) or math.isnan(self.f_hi):
            raise BracketError(
                f"no sign change on [{self.lo}, {self.hi}]: f = {self.f_lo}, {self.f_hi}"
            )

    @classmethod
    def around(cls, f: Callable[[float], float], lo: float, hi: float) -> "RootBracket":
        return cls(lo, hi, float(f(lo)), float(f(hi)))


def find_root(f: Callable[[float], float], bracket: RootBracket, tol: float = 1e-12,
              maxiter: int = 200) -> float:
    """Brent's method on a sign-changing bracket.

    Falls back to bisection whenever the interpolation step is not
    contracting, so convergence is guaranteed for continuous ``f``. The
    result always lies inside ``[bracket.lo, bracket.hi]``.
    """
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    a, b = bracket.lo, bracket.hi
    fa, fb = bracket.f_lo, bracket.f_hi
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    c, fc = a, fa
    d = e = b - a
    for _ in range(maxiter):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * _EPS * abs(b) + 0.5 * tol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = xm
        else:
            d = e = xm
        a, fa = b, fb
        b += d if abs(d) > tol1 else math.copysign(tol1, xm)
        fb = float(f(b))
    raise RuntimeError("find_root did not converge")
