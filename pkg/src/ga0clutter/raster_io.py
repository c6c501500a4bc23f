"""Raster serialization: CSV (lossless) and 16-bit binary PGM."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

PGM_MAXVAL = 65535


def format_csv_raster(values) -> str:
    buf = io.StringIO()
    np.savetxt(buf, np.asarray(values, dtype=float), fmt="%.17g", delimiter=",", newline="\n")
    return buf.getvalue()


def write_csv_raster(path, values) -> None:
    Path(path).write_bytes(format_csv_raster(values).encode("ascii"))


def read_csv_raster(path) -> np.ndarray:
    """Row-major CSV raster; ``#`` lines are ignored."""
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, dtype=float)
    if data.size == 0:
        raise ValueError(f"{path}: empty raster")
    return data


def quantize16(values, lo: float, hi: float) -> np.ndarray:
    """``round(65535 * (z - lo) / (hi - lo))`` clamped to ``[0, 65535]``."""
    v = np.asarray(values, dtype=float)
    if not hi > lo:
        return np.zeros(v.shape, dtype=np.uint16)
    q = np.rint(PGM_MAXVAL * (v - lo) / (hi - lo))
    return np.clip(q, 0, PGM_MAXVAL).astype(np.uint16)


def pgm16_bytes(values, lo: float, hi: float) -> bytes:
    q = quantize16(values, lo, hi)
    rows, cols = q.shape
    header = f"P5\n{cols} {rows}\n{PGM_MAXVAL}\n".encode("ascii")
    return header + q.astype(">u2").tobytes()


def write_pgm16(path, values, lo: float, hi: float) -> None:
    Path(path).write_bytes(pgm16_bytes(values, lo, hi))


def read_pgm16(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or len(parts) < 4:
        raise ValueError(f"{path}: not a binary PGM")
    cols, rows = (int(x) for x in parts[1].split())
    if int(parts[2]) != PGM_MAXVAL:
        raise ValueError(f"{path}: expected maxval {PGM_MAXVAL}")
    return np.frombuffer(parts[3], dtype=">u2", count=rows * cols).reshape(rows, cols)
