import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ga0clutter import raster_io


@given(hnp.arrays(float, hnp.array_shapes(min_dims=2, max_dims=2, max_side=6),
                  elements=st.floats(-1e300, 1e300)))
def test_csv_round_trip_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("r") / "x.csv"
    raster_io.write_csv_raster(path, values)
    assert raster_io.read_csv_raster(path).tobytes() == values.tobytes()


def test_csv_line_endings(tmp_path):
    path = tmp_path / "x.csv"
    raster_io.write_csv_raster(path, np.eye(2))
    assert b"\r" not in path.read_bytes()


def test_quantize():
    q = raster_io.quantize16([-1.0, 0.0, 0.5, 1.0, 2.0], 0.0, 1.0)
    np.testing.assert_array_equal(q, [0, 0, 32768, 65535, 65535])
    assert not raster_io.quantize16([3.0], 1.0, 1.0).any()


def test_pgm_round_trip(tmp_path):
    v = np.linspace(0, 1, 12).reshape(3, 4)
    path = tmp_path / "x.pgm"
    raster_io.write_pgm16(path, v, 0.0, 1.0)
    assert path.read_bytes().startswith(b"P5\n4 3\n65535\n")
    back = raster_io.read_pgm16(path)
    np.testing.assert_array_equal(back, raster_io.quantize16(v, 0.0, 1.0))
    assert len(path.read_bytes()) == len(b"P5\n4 3\n65535\n") + 24


def test_pgm_rejects_other_formats(tmp_path):
    path = tmp_path / "x.pgm"
    path.write_bytes(b"P2\n1 1\n255\n0\n")
    with pytest.raises(ValueError):
        raster_io.read_pgm16(path)
