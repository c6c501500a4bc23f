"""Target correlation structures.

The simulator takes either a parametric Gaussian-decay model with a sign
flip across the diagonal or an explicit lag matrix. A lag matrix can be read
from CSV or estimated from an image with the block Pearson scheme.

Lag convention used throughout: ``rho[k, l]`` is the correlation between
pixels ``(i, j)`` and ``(i + k, j + l)`` where the first index is the image
row and the second the column.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import CorrelationFormatError, DegenerateVarianceError, DomainError

MATRIX_THRESHOLD = 1e-3


@dataclass(frozen=True)
class ParametricCorr:
    """Gaussian-decay model with amplitude ``a``, length ``L`` and cut-off ``eps``."""

    a: float
    L: int
    eps: float = 1e-3

    def __post_init__(self):
        if not 0 < self.a < 1:
            raise DomainError(f"a must lie in (0, 1), got {self.a!r}")
        if int(self.L) != self.L or self.L < 2 or self.L % 2:
            raise DomainError(f"L must be an even integer >= 2, got {self.L!r}")
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps!r}")
        object.__setattr__(self, "L", int(self.L))


def _threshold(x: float, eps: float) -> float:
    return x if abs(x) >= eps else 0.0


def parametric_rho(model: ParametricCorr, k: int, l: int) -> float:
    """Correlation at lag ``(k, l)`` with ``k, l >= 0``.

    Positive along and below the diagonal (``k >= l``), negative above it.
    """
    if k < 0 or l < 0:
        raise DomainError("lags must be non-negative")
    if k == 0 and l == 0:
        return 1.0
    if k >= l:
        return _threshold(model.a * math.exp(-(k * k) / model.L**2), model.eps)
    return -_threshold(model.a * math.exp(-(l * l) / model.L**2), model.eps)


def parametric_base(model: ParametricCorr, size: int) -> np.ndarray:
    """The model on the quarter-grid ``{0..N/2}^2`` of an ``N x N`` torus."""
    if size < 4 or size % 2:
        raise DomainError(f"grid size must be an even integer >= 4, got {size}")
    h = size // 2 + 1
    return np.array([[parametric_rho(model, k, l) for l in range(h)] for k in range(h)])


@dataclass(frozen=True)
class MatrixCorr:
    """Explicit lag correlations, ``values[k, l]`` for ``0 <= k, l < order``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.size == 0:
            raise CorrelationFormatError(f"correlation matrix must be square, got shape {v.shape}")
        if v[0, 0] != 1.0:
            raise CorrelationFormatError(f"entry (0,0) must be 1, got {v[0, 0]!r}")
        if np.any(~np.isfinite(v)) or np.any(np.abs(v) > 1.0):
            bad = np.argwhere(~(np.abs(v) <= 1.0))[0]
            raise CorrelationFormatError(
                f"entry {tuple(int(i) for i in bad)} = {v[tuple(bad)]!r} is outside [-1, 1]"
            )
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def order(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SampleCorrelation:
    """Block Pearson estimate ``corr[k, l] = r((0,0), (k,l))``.

    ``n_c`` counts blocks across the columns, ``n_f`` down the rows.
    """

    window: int
    corr: np.ndarray
    n_c: int
    n_f: int


def load_matrix(text: str, threshold: float = MATRIX_THRESHOLD) -> MatrixCorr:
    """Parse a correlation matrix CSV.

    Leading ``#`` lines are comments. Entries below ``threshold`` in
    magnitude are stored as zero.
    """
    rows = []
    in_data = False
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if in_data:
                raise CorrelationFormatError(f"line {lineno}: comment after data")
            continue
        in_data = True
        try:
            rows.append([float(x) for x in stripped.split(",")])
        except ValueError as exc:
            raise CorrelationFormatError(f"line {lineno}: {exc}") from None
    if not rows:
        raise CorrelationFormatError("no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise CorrelationFormatError(f"ragged rows, widths {sorted(widths)}")
    values = np.array(rows)
    if values.shape[0] != values.shape[1]:
        raise CorrelationFormatError(f"correlation matrix must be square, got shape {values.shape}")
    mc = MatrixCorr(values)
    v = np.array(mc.values)
    v[np.abs(v) < threshold] = 0.0
    return MatrixCorr(v)


def save_matrix(corr) -> str:
    """Serialize ``MatrixCorr``/``SampleCorrelation`` values as CSV, 17 significant digits."""
    values = corr.values if isinstance(corr, MatrixCorr) else corr.corr
    buf = io.StringIO()
    np.savetxt(buf, values, fmt="%.17g", delimiter=",", newline="\n")
    return buf.getvalue()


def block_samples(image: np.ndarray, window: int) -> np.ndarray:
    """Top-left ``window x window`` corners of the ``2*window`` blocks.

    Returns:
        array of shape ``(n_f * n_c, window, window)``.
    """
    m, n = image.shape
    step = 2 * window
    n_f, n_c = m // step, n // step
    blocks = image[: n_f * step, : n_c * step].reshape(n_f, step, n_c, step)
    corners = blocks[:, :window, :, :window]
    return corners.transpose(0, 2, 1, 3).reshape(n_f * n_c, window, window)


def pearson_estimate(image, window: int) -> SampleCorrelation:
    """Lag correlations from non-overlapping image blocks.

    The image is cut into ``2*window`` square blocks; each block's top-left
    ``window x window`` corner is one sample of a random matrix, and the
    Pearson coefficient between corner position ``(0, 0)`` and ``(k, l)`` is
    taken across samples.

    Raises:
        DegenerateVarianceError: some corner position is constant across blocks.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise DomainError("image must be two-dimensional")
    m, n = img.shape
    if int(window) != window or window < 1 or not window < min(m, n) / 2:
        raise DomainError(f"window must be a positive integer below min(M, N)/2, got {window}")
    window = int(window)
    n_c, n_f = n // (2 * window), m // (2 * window)
    if n_c * n_f < 2:
        raise DomainError("need at least two blocks")
    samples = block_samples(img, window)
    dev = samples - samples.mean(axis=0)
    s = np.sqrt(np.sum(dev * dev, axis=0))
    zero = np.argwhere(s == 0.0)
    if zero.size:
        k, l = (int(i) for i in zero[0])
        raise DegenerateVarianceError(
            f"window position ({k},{l}) is constant across all blocks; correlation undefined"
        )
    cov = np.einsum("b,bkl->kl", dev[:, 0, 0], dev)
    corr = cov / (s[0, 0] * s)
    corr[0, 0] = 1.0
    return SampleCorrelation(window, corr, n_c, n_f)


def to_r1_rho(corr, size: int) -> np.ndarray:
    """Embed window correlations into the quarter-grid of an ``N x N`` torus.

    Lags beyond the window are zero.
    """
    values = corr.values if isinstance(corr, MatrixCorr) else np.asarray(corr.corr)
    if size < 4 or size % 2:
        raise DomainError(f"grid size must be an even integer >= 4, got {size}")
    h = size // 2 + 1
    w = values.shape[0]
    if w > h:
        raise DomainError(f"window {w} exceeds the {h} x {h} quarter-grid of size {size}")
    base = np.zeros((h, h))
    base[:w, :w] = values
    base[0, 0] = 1.0
    return base
