import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ga0clutter import corr_models as cmod
from ga0clutter import field_gen
from ga0clutter.errors import CorrelationFormatError, DegenerateVarianceError, DomainError

FLIP = cmod.ParametricCorr(0.4, 2)


class TestParametric:
    def test_values(self):
        assert cmod.parametric_rho(FLIP, 0, 0) == 1.0
        assert cmod.parametric_rho(FLIP, 1, 0) == pytest.approx(0.4 * math.exp(-0.25), abs=1e-15)
        assert cmod.parametric_rho(FLIP, 1, 0) == pytest.approx(0.31152, abs=1e-5)
        assert cmod.parametric_rho(FLIP, 0, 1) == pytest.approx(-0.31152, abs=1e-5)
        assert cmod.parametric_rho(FLIP, 8, 0) == 0.0
        assert cmod.parametric_rho(FLIP, 2, 2) == pytest.approx(0.4 * math.exp(-1.0))

    @given(st.integers(0, 40), st.integers(0, 40))
    def test_sign_follows_diagonal(self, k, l):
        r = cmod.parametric_rho(FLIP, k, l)
        assert -1 < r <= 1
        if (k, l) != (0, 0) and r != 0:
            assert (r > 0) == (k >= l)

    @pytest.mark.parametrize("kw", [dict(a=0.0, L=2), dict(a=1.0, L=2), dict(a=0.4, L=3),
                                    dict(a=0.4, L=0), dict(a=0.4, L=2, eps=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            cmod.ParametricCorr(**kw)

    def test_base_shape(self):
        base = cmod.parametric_base(FLIP, 16)
        assert base.shape == (9, 9)
        assert base[3, 1] == cmod.parametric_rho(FLIP, 3, 1)


class TestMatrixIO:
    def test_single_entry(self):
        m = cmod.load_matrix("1.0\n")
        assert m.order == 1

    def test_range_error(self):
        with pytest.raises(CorrelationFormatError):
            cmod.load_matrix("1,0.2\n1.2,0.1\n")

    def test_threshold(self):
        m = cmod.load_matrix("# comment\n1,0.0005\n-0.3,0.002\n")
        assert m.values[0, 1] == 0.0
        assert m.values[1, 1] == 0.002

    @pytest.mark.parametrize("text", ["1,0\n0.5\n", "1,0,0\n0,0,0\n", "", "0.9\n",
                                      "1,x\n0,0\n", "1,0\n# late\n0,0\n"])
    def test_format_errors(self, text):
        with pytest.raises(CorrelationFormatError):
            cmod.load_matrix(text)

    @given(st.lists(st.floats(-1, 1), min_size=8, max_size=8))
    def test_round_trip_exact(self, vals):
        v = np.array([1.0] + vals).reshape(3, 3)
        m = cmod.MatrixCorr(v)
        back = cmod.load_matrix(cmod.save_matrix(m), threshold=0.0)
        assert back.values.tobytes() == m.values.tobytes()


class TestPearson:
    def test_row_duplication(self):
        rng = np.random.default_rng(1)
        img = rng.standard_normal((64, 64))
        img[1::2] = img[0::2]
        sc = cmod.pearson_estimate(img, 4)
        assert sc.corr[1, 0] == pytest.approx(1.0, abs=1e-12)
        assert abs(sc.corr[0, 1]) < 0.5

    def test_column_duplication(self):
        rng = np.random.default_rng(2)
        img = rng.standard_normal((64, 64))
        img[:, 1::2] = img[:, 0::2]
        assert cmod.pearson_estimate(img, 4).corr[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_white_noise_null(self):
        rng = np.random.default_rng(3)
        sc = cmod.pearson_estimate(rng.standard_normal((512, 512)), 4)
        off = sc.corr.copy()
        off[0, 0] = 0
        assert sc.n_c == sc.n_f == 64
        assert np.max(np.abs(off)) <= 0.05

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(4)
        img = rng.standard_normal((40, 24))
        sc = cmod.pearson_estimate(img, 3)
        xs = [img[6 * i, 6 * j] for i in range(6) for j in range(4)]
        ys = [img[6 * i + 2, 6 * j + 1] for i in range(6) for j in range(4)]
        assert sc.corr[2, 1] == pytest.approx(np.corrcoef(xs, ys)[0, 1], abs=1e-12)
        assert (sc.n_f, sc.n_c) == (6, 4)

    def test_constant(self):
        with pytest.raises(DegenerateVarianceError):
            cmod.pearson_estimate(np.ones((32, 32)), 4)

    def test_window_bounds(self):
        with pytest.raises(DomainError):
            cmod.pearson_estimate(np.zeros((16, 16)), 8)


class TestEmbedding:
    def test_order_one_is_delta(self):
        base = cmod.to_r1_rho(cmod.load_matrix("1\n"), 8)
        expected = np.zeros((5, 5))
        expected[0, 0] = 1
        np.testing.assert_array_equal(base, expected)

    def test_padding(self):
        m = cmod.MatrixCorr(np.array([[1, 0.3, 0.1], [0.2, 0.05, 0], [-0.1, 0, 0]]))
        base = cmod.to_r1_rho(m, 16)
        np.testing.assert_array_equal(base[:3, :3], m.values)
        assert not base[3:].any() and not base[:, 3:].any()
        field_gen.extend_rho(base, 16)

    def test_too_large(self):
        with pytest.raises(DomainError):
            cmod.to_r1_rho(cmod.MatrixCorr(np.eye(6)), 8)
