"""Tests for material parameters, assembly matrices, and the energy functional."""

import numpy as np
import pytest

from hermax import media
from hermax import polyalg as pa
from hermax.grid import FieldFrame, Grid

VARS_1D = ("H", "E", "P", "J", "Q", "S")
VARS_2D = ("Hz", "Ex", "Ey", "Px", "Py", "Jx", "Jy", "Q", "S")


def constitutive_map(e, q, p):
    """Pointwise nonlinear part of the displacement law, D/eps = F(E) with Q frozen.

    Works for any number of field components (1, 2, or 3): the cubic term
    couples through the squared magnitude of the whole vector.
    """
    e = np.asarray(e, dtype=float)
    mag2 = np.sum(e * e)
    return p.eps_inf * e + p.theta_k * mag2 * e + p.theta_r * q * e


def jacobian_fd(e, q, p, h=1e-6):
    """Central-difference Jacobian of the constitutive map at (e, q)."""
    e = np.asarray(e, dtype=float)
    n = e.size
    out = np.empty((n, n))
    for j in range(n):
        dp = e.copy()
        dm = e.copy()
        dp[j] += h
        dm[j] -= h
        out[:, j] = (constitutive_map(dp, q, p) - constitutive_map(dm, q, p)) / (2 * h)
    return out


class TestMediumParams:
    def test_defaults_are_vacuum_like(self):
        p = media.MediumParams()
        assert p.mu == 1.0 and p.eps_inf == 1.0 and p.a == 0.0

    def test_theta_split(self):
        p = media.MediumParams(a=0.07, theta=0.3)
        assert p.theta_k == pytest.approx(0.049)
        assert p.theta_r == pytest.approx(0.021)
        assert p.theta_k + p.theta_r == pytest.approx(p.a)

    def test_all_violations_reported_at_once(self):
        with pytest.raises(ValueError) as err:
            media.MediumParams(mu=-1.0, eps=0.0, theta=1.5)
        msg = str(err.value)
        assert "mu" in msg and "eps" in msg and "theta" in msg

    def test_gamma_sign_checked(self):
        with pytest.raises(ValueError, match="gamma"):
            media.MediumParams(gamma=-0.1)

    def test_soliton_plasma_frequency(self):
        # omega_p is pinned by the static permittivity jump 5.25 - 2.25.
        p = media.SOLITON_PARAMS
        assert p.omega_p**2 / p.omega0**2 == pytest.approx(3.0)


class TestAssemblyMatrix:
    def test_1d_spot_value(self):
        # eps_inf=2.25, theta_k=0.049, E0=1, Q0=0 -> 2.25 + 3*0.049 = 2.397
        val = media.matrix_m_1d(1.0, 0.0, media.SOLITON_PARAMS)
        assert val == pytest.approx(2.397)

    def test_1d_linear_medium(self):
        p = media.MediumParams(eps_inf=4.0)
        e = np.linspace(-3, 3, 11)
        assert np.allclose(media.matrix_m_1d(e, 0.5, p), 4.0)

    def test_1d_matches_jacobian(self):
        p = media.MediumParams(eps_inf=1.5, a=0.4, theta=0.25)
        for e0, q0 in [(0.7, 0.0), (-1.2, 0.9), (0.0, -0.3)]:
            jac = jacobian_fd(np.array([e0]), q0, p)
            assert media.matrix_m_1d(e0, q0, p) == pytest.approx(jac[0, 0], rel=1e-8)

    def test_2d_matches_jacobian(self):
        rng = np.random.default_rng(7)
        p = media.MediumParams(eps_inf=2.0, a=0.6, theta=0.35)
        for _ in range(20):
            e = rng.uniform(-2, 2, size=2)
            q = rng.uniform(-1, 1)
            got = media.matrix_m_2d(e[0], e[1], q, p)
            assert np.allclose(got, jacobian_fd(e, q, p), rtol=1e-7, atol=1e-8)

    def test_3d_matches_jacobian(self):
        rng = np.random.default_rng(8)
        p = media.MediumParams(eps_inf=1.25, a=0.5, theta=0.6)
        for _ in range(20):
            e = rng.uniform(-2, 2, size=3)
            q = rng.uniform(-1, 1)
            got = media.matrix_m_3d(e[0], e[1], e[2], q, p)
            assert np.allclose(got, jacobian_fd(e, q, p), rtol=1e-7, atol=1e-8)

    def test_2d_symmetry_and_broadcast(self):
        ex = np.array([[0.1, 0.2], [0.3, 0.4]])
        ey = np.array([[1.0, -1.0], [0.5, 0.0]])
        m = media.matrix_m_2d(ex, ey, 0.0, media.MMS_PARAMS)
        assert m.shape == (2, 2, 2, 2)
        assert np.array_equal(m[..., 0, 1], m[..., 1, 0])

    def test_2d_kerr_determinant_identity(self):
        # Pure Kerr: det = eps_inf^2 + 4 a eps_inf s + 3 a^2 s^2, s = phix + phiy.
        rng = np.random.default_rng(11)
        p = media.MediumParams(eps_inf=1.75, a=0.3, theta=0.0)
        ex, ey = rng.uniform(-3, 3, size=(2, 50))
        s = ex**2 + ey**2
        det = np.linalg.det(media.matrix_m_2d(ex, ey, 0.0, p))
        expected = p.eps_inf**2 + 4 * p.a * p.eps_inf * s + 3 * p.a**2 * s**2
        assert np.allclose(det, expected, rtol=1e-12)
        # The same expression with eps_inf to the first power in the leading
        # term does not reproduce the determinant.
        wrong = p.eps_inf + 4 * p.a * p.eps_inf * s + 3 * p.a**2 * s**2
        assert not np.allclose(det, wrong)

    def test_3d_kerr_determinant_identity(self):
        rng = np.random.default_rng(12)
        p = media.MediumParams(eps_inf=1.4, a=0.25, theta=0.0)
        e = rng.uniform(-2, 2, size=(40, 3))
        s = np.sum(e * e, axis=1)
        det = np.linalg.det(media.matrix_m_3d(e[:, 0], e[:, 1], e[:, 2], 0.0, p))
        assert np.allclose(det, (p.eps_inf + p.a * s) ** 2 * (p.eps_inf + 3 * p.a * s), rtol=1e-12)

    def test_3d_all_ones_spot_value(self):
        p = media.MediumParams(eps_inf=1.0, a=1.0, theta=0.0)
        det = np.linalg.det(media.matrix_m_3d(1.0, 1.0, 1.0, 0.0, p))
        assert det == pytest.approx(160.0)


class TestSolvability:
    def test_scalar(self):
        ok, val = media.check_solvability(2.397)
        assert ok and val == pytest.approx(2.397)
        ok, val = media.check_solvability(-0.5)
        assert not ok and val == pytest.approx(-0.5)

    def test_pure_kerr_always_definite(self):
        # Without the delayed term the matrix is positive definite for any
        # field amplitude; scan a large random sample.
        rng = np.random.default_rng(23)
        p = media.MediumParams(eps_inf=1.1, a=2.0, theta=0.0)
        ex, ey = rng.uniform(-50, 50, size=(2, 10_000))
        mats = media.matrix_m_2d(ex, ey, 0.0, p)
        eigs = np.linalg.eigvalsh(mats)
        assert np.min(eigs) >= p.eps_inf - 1e-9

    def test_negative_q_can_break_definiteness(self):
        p = media.MediumParams(eps_inf=1.0, a=1.0, theta=1.0)
        q_bad = -(p.eps_inf + 1.0) / p.theta_r
        ok, val = media.check_solvability(media.matrix_m_1d(0.0, q_bad, p))
        assert not ok and val < 0

    def test_matrix_positive_case(self):
        m = media.matrix_m_2d(0.5, -0.5, 0.2, media.MMS_PARAMS)
        ok, smallest = media.check_solvability(m)
        assert ok and smallest > 0


def make_interface(inside=None, outside=None, r_gamma=0.5, delta=0.1):
    inside = inside or media.MediumParams(mu=1.0, eps=1.0, eps_inf=1.0)
    outside = outside or media.MediumParams(
        mu=1.0, eps=1.0, eps_inf=2.25, a=0.07, theta=0.3,
        omega0=5.84, omega_p=10.117, omega_v=1.28,
    )
    return media.InterfaceModel(
        center=(0.0, 0.0), r_gamma=r_gamma, delta=delta,
        inside_params=inside, outside_params=outside,
    )


class TestInterface:
    def test_weight_limits_and_midpoint(self):
        im = make_interface()
        assert media.interface_weight(0.0, im) == 0.0
        assert media.interface_weight(10.0, im) == 1.0
        assert media.interface_weight(im.r_gamma, im) == pytest.approx(0.5)

    def test_weight_monotone(self):
        im = make_interface()
        r = np.linspace(0.0, 1.5, 2001)
        w = media.interface_weight(r, im)
        assert np.all(np.diff(w) >= -1e-14)
        assert np.all((w >= 0) & (w <= 1))

    def test_weight_smooth_at_annulus_edges(self):
        # The cubic blend has zero slope where it meets the constant regions.
        # The difference quotient sees the one-sided curvature 6/delta^2, so
        # the bound scales like 3 h / delta^2.
        im = make_interface()
        h = 1e-6
        for r_edge in (im.r_gamma - im.delta / 2, im.r_gamma + im.delta / 2):
            dwdr = (media.interface_weight(r_edge + h, im)
                    - media.interface_weight(r_edge - h, im)) / (2 * h)
            assert abs(dwdr) < 5 * h / im.delta**2

    def test_blend_midpoint_values(self):
        im = make_interface()
        p = media.blend_params(im.r_gamma, 0.0, im)
        assert p.a == pytest.approx(0.035)
        assert p.eps_inf == pytest.approx(1.625)

    def test_blend_far_field_recovers_endpoints(self):
        im = make_interface()
        inside = media.blend_params(0.0, 0.0, im)
        outside = media.blend_params(5.0, 5.0, im)
        assert inside.eps_inf == pytest.approx(1.0)
        assert inside.a == pytest.approx(0.0)
        assert outside.eps_inf == pytest.approx(2.25)
        assert outside.omega_v == pytest.approx(1.28)

    def test_validation(self):
        with pytest.raises(ValueError):
            media.InterfaceModel((0, 0), -1.0, 0.1, media.VACUUM_PARAMS, media.VACUUM_PARAMS)


class TestEnergyTerms:
    def test_zero_fields_zero_terms(self):
        vals = {k: np.zeros(4) for k in VARS_1D}
        terms = media.energy_density_terms(vals, media.MMS_PARAMS)
        for arr in terms.values():
            assert np.all(arr == 0)

    def test_disabled_oscillator_with_current_raises(self):
        vals = {k: np.zeros(3) for k in VARS_1D}
        vals["J"] = np.array([0.0, 0.1, 0.0])
        p = media.MediumParams(omega_p=0.0, omega_v=1.0)
        with pytest.raises(ValueError, match="omega_p"):
            media.energy_density_terms(vals, p)

    def test_pointwise_disabled_oscillator_allowed(self):
        # With spatially varying parameters a zero plasma frequency at some
        # points just zeroes those points' polarization energy.
        vals = {k: np.zeros(3) for k in VARS_1D}
        vals["J"] = np.array([0.0, 0.1, 0.2])
        p = media.MediumParams(omega_p=np.array([0.0, 2.0, 1.0]), omega_v=1.0)
        terms = media.energy_density_terms(vals, p)
        assert terms["current"][0] == 0.0
        assert terms["current"][1] == pytest.approx(0.5 * 0.1**2 / 4.0)

    def test_sigma_forms(self):
        vals = {k: np.zeros(1) for k in VARS_1D}
        vals["S"] = np.array([2.0])
        p = media.MediumParams(a=0.4, theta=0.5, omega_p=3.0, omega_v=2.0)
        vib = media.energy_density_terms(vals, p, sigma_form="vibration")
        prt = media.energy_density_terms(vals, p, sigma_form="printed")
        ath = p.eps * p.a * p.theta
        assert vib["sigma"][0] == pytest.approx(0.25 * ath * 4.0 / 4.0)
        assert prt["sigma"][0] == pytest.approx(0.25 * ath * 4.0 / 9.0)
        with pytest.raises(ValueError):
            media.energy_density_terms(vals, p, sigma_form="quadratic")


class TestEnergy1D:
    def grid(self, x0=0.0, x1=2.0, nx=8):
        return Grid(dim=1, x0=x0, x1=x1, nx=nx, dt=0.01, nt=1)

    def test_zero_frame(self):
        g = self.grid()
        fr = FieldFrame.zeros(VARS_1D, g, m_max=3)
        rep = media.energy(fr, g, media.MMS_PARAMS)
        assert rep.total == 0.0

    def test_constant_magnetic_field(self):
        g = self.grid()
        fr = FieldFrame.zeros(VARS_1D, g, m_max=2)
        fr.data[VARS_1D.index("H"), :, 0] = 1.0
        rep = media.energy(fr, g, media.MediumParams(mu=2.0))
        assert rep.total == pytest.approx(2.0)  # 0.5 * mu * 1 * length
        assert rep.components["magnetic"] == pytest.approx(2.0)
        assert rep.components["electric"] == 0.0

    def test_constant_fields_all_terms(self):
        g = Grid(dim=1, x0=0.0, x1=3.0, nx=5, dt=0.01, nt=1)
        p = media.MediumParams(eps=2.0, a=0.4, theta=0.5,
                               omega0=1.5, omega_p=2.0, omega_v=2.5)
        fr = FieldFrame.zeros(VARS_1D, g, m_max=1)
        consts = {"H": 0.5, "E": 1.5, "P": 0.3, "J": 0.8, "Q": 0.7, "S": 1.1}
        for name, c in consts.items():
            fr.data[VARS_1D.index(name), :, 0] = c
        rep = media.energy(fr, g, p)
        length = 3.0
        ath = p.eps * p.a * p.theta
        expected = {
            "magnetic": 0.5 * 0.5**2 * length,
            "electric": 0.5 * 2.0 * 1.5**2 * length,
            "current": 0.5 * 2.0 * 0.8**2 / 4.0 * length,
            "polarization": 0.5 * 2.0 * 1.5**2 * 0.3**2 / 4.0 * length,
            "qe_cross": 0.5 * ath * 0.7 * 1.5**2 * length,
            "kerr_quartic": 0.75 * 2.0 * 0.4 * 0.5 * 1.5**4 * length,
            "q_square": 0.25 * ath * 0.7**2 * length,
            "sigma": 0.25 * ath * 1.1**2 / 2.5**2 * length,
        }
        for key, want in expected.items():
            assert rep.components[key] == pytest.approx(want), key
        assert rep.total == pytest.approx(sum(expected.values()))

    def test_sinusoidal_field_quadratic_and_quartic(self):
        # E = sin(2 pi x) on [0, 1]: integral of E^2 is 1/2, of E^4 is 3/8.
        g = Grid(dim=1, x0=0.0, x1=1.0, nx=20, dt=0.01, nt=1)
        m = 5
        w = 2 * np.pi
        x = g.nodes_x("primal")
        derivs = np.stack(
            [w**k * np.array([np.sin, np.cos, lambda z: -np.sin(z),
                              lambda z: -np.cos(z)][k % 4](w * x))
             for k in range(m + 1)], axis=-1)
        fr = FieldFrame.zeros(VARS_1D, g, m_max=m)
        fr.data[VARS_1D.index("E")] = pa.scale_derivs(derivs, g.dx)
        p = media.MediumParams(a=0.8, theta=0.0)
        rep = media.energy(fr, g, p)
        assert rep.components["electric"] == pytest.approx(0.25, rel=1e-9)
        assert rep.components["kerr_quartic"] == pytest.approx(0.75 * 0.8 * 3.0 / 8.0, rel=1e-8)

    def test_quad_override_matches_default_for_polynomials(self):
        g = self.grid()
        fr = FieldFrame.zeros(VARS_1D, g, m_max=2)
        fr.data[VARS_1D.index("E"), :, 0] = 0.9
        p = media.MediumParams(a=0.2, theta=0.0)
        r1 = media.energy(fr, g, p)
        r2 = media.energy(fr, g, p, quad_points=12)
        assert r1.total == pytest.approx(r2.total, rel=1e-13)

    def test_interface_rejected_in_1d(self):
        g = self.grid()
        fr = FieldFrame.zeros(VARS_1D, g, m_max=1)
        with pytest.raises(ValueError, match="two dimensional"):
            media.energy(fr, g, make_interface())


class TestEnergy2D:
    def grid(self):
        return Grid(dim=2, x0=0.0, x1=2.0, nx=4, dt=0.01, nt=1,
                    y0=0.0, y1=3.0, ny=6)

    def test_constant_magnetic_field(self):
        g = self.grid()
        fr = FieldFrame.zeros(VARS_2D, g, m_max=1)
        fr.data[VARS_2D.index("Hz"), :, :, 0, 0] = 1.0
        rep = media.energy(fr, g, media.VACUUM_PARAMS)
        assert rep.total == pytest.approx(0.5 * 6.0)  # half area

    def test_two_component_quartic(self):
        # Ex = Ey = c makes |E|^2 = 2 c^2, so the quartic term sees 4 c^4.
        g = self.grid()
        c = 1.2
        fr = FieldFrame.zeros(VARS_2D, g, m_max=1)
        for name in ("Ex", "Ey"):
            fr.data[VARS_2D.index(name), :, :, 0, 0] = c
        p = media.MediumParams(a=0.5, theta=0.0)
        rep = media.energy(fr, g, p)
        area = 6.0
        assert rep.components["electric"] == pytest.approx(0.5 * 2 * c**2 * area)
        assert rep.components["kerr_quartic"] == pytest.approx(0.75 * 0.5 * 4 * c**4 * area)

    def test_uniform_interface_matches_uniform_medium(self):
        g = self.grid()
        p = media.MediumParams(mu=1.0, eps=1.0, eps_inf=2.0, a=0.1, theta=0.4,
                               omega0=1.0, omega_p=1.0, omega_v=1.5)
        im = media.InterfaceModel(center=(1.0, 1.5), r_gamma=0.5, delta=0.2,
                                  inside_params=p, outside_params=p)
        fr = FieldFrame.zeros(VARS_2D, g, m_max=1)
        consts = {"Hz": 0.4, "Ex": 0.8, "Ey": -0.6, "Px": 0.1, "Py": 0.2,
                  "Jx": 0.3, "Jy": -0.1, "Q": 0.5, "S": 0.9}
        for name, c in consts.items():
            fr.data[VARS_2D.index(name), :, :, 0, 0] = c
        r_uniform = media.energy(fr, g, p)
        r_blend = media.energy(fr, g, im)
        assert r_blend.total == pytest.approx(r_uniform.total, rel=1e-12)

    def test_vacuum_hole_reduces_electric_energy(self):
        # eps_inf drops inside the hole, so a constant E field carries less
        # energy with the interface than with the glass parameters everywhere.
        g = Grid(dim=2, x0=-2.0, x1=2.0, nx=10, dt=0.01, nt=1,
                 y0=-2.0, y1=2.0, ny=10)
        im = make_interface(r_gamma=0.8, delta=0.3)
        fr = FieldFrame.zeros(VARS_2D, g, m_max=1)
        fr.data[VARS_2D.index("Ex"), :, :, 0, 0] = 1.0
        r_blend = media.energy(fr, g, im)
        r_glass = media.energy(fr, g, im.outside_params)
        assert r_blend.total < r_glass.total
        assert r_blend.total > 0


class TestEnergyReport:
    def test_component_sum_checked(self):
        with pytest.raises(ValueError, match="component sum"):
            media.EnergyReport(total=1.0, components={"magnetic": 0.4})

    def test_consistent_report(self):
        rep = media.EnergyReport(total=1.0, components={"a": 0.25, "b": 0.75})
        assert rep.total == 1.0
