"""Interpolation and truncated-product checks against independent oracles."""

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hermax import polyalg as pa


def sample_derivs(f, x0, m, var):
    """Exact derivatives of a sympy expression at a point."""
    return np.array([float(sp.diff(f, var, k).subs(var, x0)) for k in range(m + 1)])


def full_conv(a, b):
    """Brute-force full polynomial product, no truncation."""
    out = np.zeros(len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


class TestInterp1D:
    def test_constant(self):
        c = pa.hermite_interp_1d(pa.DerivData([3.0], 0), pa.DerivData([3.0], 0), 1.0)
        assert np.allclose(c.coeffs, [3.0, 0.0])

    def test_linear(self):
        c = pa.hermite_interp_1d(pa.DerivData([0.0], 0), pa.DerivData([1.0], 0), 1.0)
        assert np.allclose(c.coeffs, [0.5, 1.0])

    def test_cubic_reproduction(self):
        # f(x) = x^3 sampled on the cell [0, 1]; m=1 interpolants hold cubics.
        x = sp.Symbol("x")
        f = x**3
        left = pa.DerivData(sample_derivs(f, 0.0, 1, x), 1)
        right = pa.DerivData(sample_derivs(f, 1.0, 1, x), 1)
        c = pa.hermite_interp_1d(left, right, 1.0)
        rng = np.random.default_rng(0)
        for xi in rng.uniform(-0.5, 0.5, 10):
            xval = 0.5 + xi
            assert abs(pa.eval_poly(c, xi) - xval**3) < 1e-13

    @pytest.mark.parametrize("m", range(7))
    def test_monomial_exactness(self, m):
        # Every monomial x^j, j <= 2m+1, must be reproduced on the cell.
        x = sp.Symbol("x")
        dx = 0.37
        xc = 0.21
        xis = np.linspace(-0.5, 0.5, 11)
        for j in range(2 * m + 2):
            f = (x - xc) ** j  # center the monomial so exact values stay O(1)
            left = pa.DerivData(sample_derivs(f, xc - dx / 2, m, x), m)
            right = pa.DerivData(sample_derivs(f, xc + dx / 2, m, x), m)
            c = pa.hermite_interp_1d(left, right, dx)
            exact = (xis * dx) ** j
            got = pa.eval_poly_1d(c.coeffs, xis)
            scale = max(np.max(np.abs(exact)), 1e-30)
            assert np.max(np.abs(got - exact)) / scale < 1e-12

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_interp_error_decay(self, m):
        # Interpolation error for sin(10 pi x) decays as O(dx^{2m+2}).
        x = sp.Symbol("x")
        f = sp.sin(10 * sp.pi * x)
        fl = sp.lambdify(x, f)
        errs = []
        dxs = [0.05, 0.025, 0.0125, 0.00625]
        for dx in dxs:
            xc = 0.013
            left = pa.DerivData(sample_derivs(f, xc - dx / 2, m, x), m)
            right = pa.DerivData(sample_derivs(f, xc + dx / 2, m, x), m)
            c = pa.hermite_interp_1d(left, right, dx)
            xis = np.linspace(-0.5, 0.5, 41)
            errs.append(np.max(np.abs(pa.eval_poly_1d(c.coeffs, xis) - fl(xc + xis * dx))))
        slope = np.polyfit(np.log(dxs), np.log(errs), 1)[0]
        assert abs(slope - (2 * m + 2)) < 0.3

    def test_roundtrip_endpoint_data(self):
        # Mapping data -> coefficients -> endpoint Taylor data is the identity.
        rng = np.random.default_rng(1)
        for m in range(5):
            data = rng.uniform(-1, 1, 2 * m + 2)
            c = pa.interp_matrix(m) @ data
            back = pa.taylor_shift_matrix(m) @ c
            assert np.max(np.abs(back - data)) < 1e-12

    def test_mismatched_m_rejected(self):
        with pytest.raises(ValueError):
            pa.hermite_interp_1d(pa.DerivData([0.0], 0), pa.DerivData([0.0, 0.0], 1), 1.0)
        with pytest.raises(ValueError):
            pa.hermite_interp_1d(pa.DerivData([0.0], 0), pa.DerivData([0.0], 0), -1.0)


class TestInterp2D:
    def test_constant(self):
        one = np.zeros((2, 2))
        one[0, 0] = 1.0
        c = pa.hermite_interp_2d([[one, one], [one, one]], 1.0, 1.0)
        expect = np.zeros((4, 4))
        expect[0, 0] = 1.0
        assert np.allclose(c.coeffs, expect)

    def test_bilinear(self):
        # f(x, y) = x*y on the unit cell centered at (0.5, 0.5).
        x, y = sp.symbols("x y")
        f = x * y
        corners = [[None, None], [None, None]]
        for i, xv in enumerate((0.0, 1.0)):
            for j, yv in enumerate((0.0, 1.0)):
                d = np.array(
                    [
                        [float(sp.diff(f, x, k, y, l).subs({x: xv, y: yv})) for l in range(2)]
                        for k in range(2)
                    ]
                )
                corners[i][j] = d
        c = pa.hermite_interp_2d(corners, 1.0, 1.0)
        rng = np.random.default_rng(2)
        for _ in range(10):
            xi, eta = rng.uniform(-0.5, 0.5, 2)
            assert abs(pa.eval_poly(c, xi, eta) - (0.5 + xi) * (0.5 + eta)) < 1e-13

    def test_cubic_tensor(self):
        x, y = sp.symbols("x y")
        f = x**3 * y**3
        m = 1
        corners = [[None, None], [None, None]]
        for i, xv in enumerate((0.0, 1.0)):
            for j, yv in enumerate((0.0, 1.0)):
                corners[i][j] = np.array(
                    [
                        [float(sp.diff(f, x, k, y, l).subs({x: xv, y: yv})) for l in range(m + 1)]
                        for k in range(m + 1)
                    ]
                )
        c = pa.hermite_interp_2d(corners, 1.0, 1.0)
        rng = np.random.default_rng(3)
        for _ in range(10):
            xi, eta = rng.uniform(-0.5, 0.5, 2)
            assert abs(pa.eval_poly(c, xi, eta) - (0.5 + xi) ** 3 * (0.5 + eta) ** 3) < 1e-12


class TestTruncProduct:
    def test_m0(self):
        a = pa.CoeffTensor1D([1.0, 1.0], 0)
        assert np.allclose(pa.trunc_product_1d(a, a).coeffs, [1.0, 2.0])

    def test_identity(self):
        rng = np.random.default_rng(4)
        a = pa.CoeffTensor1D(rng.uniform(-1, 1, 8), 3)
        one = np.zeros(8)
        one[0] = 1.0
        assert np.allclose(pa.trunc_product_1d(a, pa.CoeffTensor1D(one, 3)).coeffs, a.coeffs)

    def test_against_full_convolution(self):
        rng = np.random.default_rng(5)
        a = rng.uniform(-1, 1, 8)
        b = rng.uniform(-1, 1, 8)
        ref = full_conv(a, b)[:8]
        got = pa.trunc_conv_1d(a, b)
        assert np.max(np.abs(got - ref)) < 1e-14 * np.max(np.abs(ref))

    def test_integer_inputs_bitwise(self):
        rng = np.random.default_rng(6)
        a = rng.integers(-9, 9, 10).astype(float)
        b = rng.integers(-9, 9, 10).astype(float)
        assert np.array_equal(pa.trunc_conv_1d(a, b), full_conv(a, b)[:10])

    def test_2d_identity(self):
        rng = np.random.default_rng(7)
        a = rng.uniform(-1, 1, (6, 6))
        one = np.zeros((6, 6))
        one[0, 0] = 1.0
        assert np.allclose(pa.trunc_conv_2d(one, a), a)

    def test_2d_separable(self):
        rng = np.random.default_rng(8)
        u, v, up, vp = (rng.uniform(-1, 1, 6) for _ in range(4))
        a = np.outer(u, v)
        b = np.outer(up, vp)
        ref = np.outer(pa.trunc_conv_1d(u, up), pa.trunc_conv_1d(v, vp))
        # Separable tensors multiply factorwise up to truncation.
        assert np.allclose(pa.trunc_conv_2d(a, b), ref, atol=1e-13)

    def test_2d_against_brute_force(self):
        rng = np.random.default_rng(9)
        n = 6  # m = 2
        a = rng.uniform(-1, 1, (n, n))
        b = rng.uniform(-1, 1, (n, n))
        ref = np.zeros((n, n))
        for k in range(n):
            for l in range(n):
                for i in range(k + 1):
                    for j in range(l + 1):
                        ref[k, l] += a[i, j] * b[k - i, l - j]
        assert np.max(np.abs(pa.trunc_conv_2d(a, b) - ref)) < 1e-13

    @given(
        st.integers(min_value=0, max_value=4),
        st.integers(min_value=0, max_value=2**31 - 1),
    )
    @settings(max_examples=30, deadline=None)
    def test_commutativity(self, m, seed):
        rng = np.random.default_rng(seed)
        a = rng.uniform(-1, 1, 2 * m + 2)
        b = rng.uniform(-1, 1, 2 * m + 2)
        assert np.allclose(pa.trunc_conv_1d(a, b), pa.trunc_conv_1d(b, a), atol=1e-14)


class TestDerivs:
    def test_value_readoff(self):
        c = pa.CoeffTensor1D([3.0, 0.0], 0)
        assert pa.coeffs_to_derivs(c, 0.7, 0).values[0] == 3.0

    def test_first_derivative_scaling(self):
        c = pa.CoeffTensor1D([0.0, 1.0, 0.0, 0.0], 1)
        assert np.isclose(pa.coeffs_to_derivs(c, 0.5, 1).values[1], 2.0)

    def test_second_derivative_scaling(self):
        c = pa.CoeffTensor1D([0.0, 0.0, 1.0, 0.0], 1)
        d = pa.unscale_derivs(c.coeffs, 0.1)
        assert np.isclose(d[2], 200.0)

    def test_m_out_too_large(self):
        with pytest.raises(ValueError):
            pa.coeffs_to_derivs(pa.CoeffTensor1D([1.0, 0.0], 0), 1.0, 1)


class TestEval:
    def test_center(self):
        assert pa.eval_poly(pa.CoeffTensor1D([1.0, 2.0], 0), 0.0) == 1.0

    def test_endpoint(self):
        assert pa.eval_poly(pa.CoeffTensor1D([1.0, 2.0], 0), 0.5) == 2.0

    def test_2d_single_term(self):
        c = np.zeros((4, 4))
        c[1, 1] = 4.0
        assert np.isclose(pa.eval_poly(pa.CoeffTensor2D(c, 1), 0.5, 0.5), 1.0)
