import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from errdens.kernels import K0, K1, KernelSpec, compute_constants, eval_k0, eval_k1, quadrature_nodes
from scipy.integrate import simpson

v = sp.symbols("v")
K1_SYM = sp.Rational(315, 256) * (1 - v**2) ** 4
K0_SYM = sp.Rational(3, 2) * (1 - 4 * v**2)


def exact(expr, lo, hi):
    return float(sp.integrate(expr, (v, lo, hi)))


class TestEvalK0:
    def test_peak(self):
        assert eval_k0(0.0, K0(1)) == 1.5

    def test_outside_support(self):
        assert eval_k0(0.6, K0(1)) == 0.0

    def test_product_value(self):
        factor = 1.5 * (1 - 4 * 0.25**2)
        assert eval_k0([0.25, 0.25], K0(2)) == pytest.approx(factor * factor, rel=1e-15)
        assert factor * factor == pytest.approx(1.265625, rel=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_k0([0.1, 0.2, 0.3], K0(2))
        with pytest.raises(ValueError):
            eval_k0(0.1, K0(2))

    def test_support_boundary(self):
        assert eval_k0(0.5, K0(1)) == 0.0
        assert eval_k0(0.5 + 1e-12, K0(1)) == 0.0
        assert eval_k0(0.5 - 1e-6, K0(1)) > 0.0

    def test_batched_points(self):
        z = np.array([[0.0, 0.0], [0.25, 0.25], [0.6, 0.0]])
        np.testing.assert_allclose(eval_k0(z, K0(2)), [2.25, 1.265625, 0.0], rtol=1e-15)

    @given(st.floats(-2, 2), st.floats(-2, 2))
    def test_symmetric_nonnegative(self, a, b):
        k = eval_k0([a, b], K0(2))
        assert k >= 0
        assert k == eval_k0([-a, -b], K0(2))


class TestEvalK1:
    def test_peak(self):
        assert eval_k1(0.0) == 315 / 256

    def test_third_derivative_vanishes_at_boundary(self):
        assert eval_k1(1.0, 3) == 0.0
        assert eval_k1(-1.0, 3) == 0.0

    def test_first_derivative_value(self):
        expected = -(315 / 256) * 4 * 0.75**3
        assert eval_k1(0.5, 1) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(-2.0764, abs=1e-4)
        h = 1e-5
        fd = (eval_k1(0.5 + h) - eval_k1(0.5 - h)) / (2 * h)
        assert eval_k1(0.5, 1) == pytest.approx(fd, rel=1e-8)

    def test_bad_order(self):
        with pytest.raises(ValueError):
            eval_k1(0.1, 4)
        with pytest.raises(ValueError):
            eval_k1(0.1, -1)

    @pytest.mark.parametrize("order", [0, 1, 2, 3])
    def test_matches_symbolic_derivative(self, order):
        expr = sp.diff(K1_SYM, v, order)
        f = sp.lambdify(v, expr, "numpy")
        pts = np.linspace(-0.999, 0.999, 257)
        np.testing.assert_allclose(eval_k1(pts, order), f(pts), rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("order", [0, 1, 2, 3])
    def test_exact_zero_outside(self, order):
        pts = np.array([-3.0, -1.0 - 1e-12, -1.0, 1.0, 1.0 + 1e-12, 5.0])
        assert np.all(eval_k1(pts, order) == 0.0)

    @given(st.floats(-3, 3))
    def test_symmetry(self, x):
        assert eval_k1(x) == eval_k1(-x)
        assert eval_k1(x) >= 0


class TestConstants:
    def test_quartic_against_exact_polynomials(self):
        c = compute_constants(K1)
        assert abs(c.integral - 1) < 1e-8
        assert abs(c.first_moment) < 1e-8
        mu2 = exact(v**2 * K1_SYM, -1, 1)
        r = exact(K1_SYM**2, -1, 1)
        assert mu2 == pytest.approx(1 / 11, rel=1e-14)
        assert abs(c.second_moment - mu2) < 1e-8
        assert abs(c.squared_integral - r) < 1e-8

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_product_epanechnikov(self, d):
        c = compute_constants(K0(d))
        assert abs(c.integral - 1) < 1e-8
        assert np.all(np.abs(c.first_moment) < 1e-8)
        np.testing.assert_allclose(c.second_moment, exact(v**2 * K0_SYM, -0.5, 0.5), atol=1e-8)
        assert c.squared_integral == pytest.approx(exact(K0_SYM**2, -0.5, 0.5) ** d, abs=1e-8)

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_derivative_integrals_vanish(self, order):
        u = quadrature_nodes(K1)
        assert abs(simpson(eval_k1(u, order), x=u)) < 1e-7

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            KernelSpec("gaussian")
        with pytest.raises(ValueError):
            KernelSpec("quartic_smooth", 2)
        assert K0(3).support_halfwidth == 0.5
        assert K1.support_halfwidth == 1.0
