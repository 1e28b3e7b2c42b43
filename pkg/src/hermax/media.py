"""Material parameters, constitutive assembly matrices, and the energy functional.

The constitutive law couples the displacement field to the electric field
through an instantaneous cubic (Kerr) term and a delayed vibrational (Raman)
term, split by the ratio theta: theta_K = a(1-theta) weights the Kerr part
and theta_R = a*theta the Raman part. Linear dispersion enters through a
damped resonance pair (P, J).

Parameters may be scalars or per-cell numpy arrays (used by the diffusive
interface model); every formula here broadcasts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil
from typing import Union

import numpy as np

from . import grid as gridmod
from . import polyalg as pa

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class MediumParams:
    """Physical constants of the propagation medium.

    mu, eps are the vacuum-like scalings; eps_inf the relative permittivity at
    infinite frequency; a the third-order coupling strength; theta in [0, 1]
    the Raman fraction; omega0/omega_p the resonance and plasma frequencies of
    the linear polarization; omega_v the vibrational frequency; gamma, gamma_v
    the damping rates. omega_p = 0 disables the (P, J) pair entirely.
    """

    mu: ArrayLike = 1.0
    eps: ArrayLike = 1.0
    eps_inf: ArrayLike = 1.0
    a: ArrayLike = 0.0
    theta: ArrayLike = 0.0
    omega0: ArrayLike = 0.0
    omega_p: ArrayLike = 0.0
    omega_v: ArrayLike = 0.0
    gamma: ArrayLike = 0.0
    gamma_v: ArrayLike = 0.0

    def __post_init__(self) -> None:
        checks = [
            (np.all(np.asarray(self.mu) > 0), "mu must be positive"),
            (np.all(np.asarray(self.eps) > 0), "eps must be positive"),
            (np.all(np.asarray(self.eps_inf) > 0), "eps_inf must be positive"),
            (np.all(np.asarray(self.a) >= 0), "a must be nonnegative"),
            (
                np.all((np.asarray(self.theta) >= 0) & (np.asarray(self.theta) <= 1)),
                "theta must lie in [0, 1]",
            ),
            (np.all(np.asarray(self.gamma) >= 0), "gamma must be nonnegative"),
            (np.all(np.asarray(self.gamma_v) >= 0), "gamma_v must be nonnegative"),
        ]
        bad = [msg for ok, msg in checks if not ok]
        if bad:
            raise ValueError("; ".join(bad))

    @property
    def theta_k(self) -> ArrayLike:
        return self.a * (1.0 - self.theta)

    @property
    def theta_r(self) -> ArrayLike:
        return self.a * self.theta


# Built-in parameter sets matching the shipped presets.
MMS_PARAMS = MediumParams(
    mu=1.0, eps=1.0, eps_inf=1.0, a=1.0 / 3.0, theta=0.5,
    omega0=1.0, omega_p=1.0, omega_v=1.0, gamma=0.05, gamma_v=0.05,
)

SOLITON_PARAMS = MediumParams(
    mu=1.0, eps=1.0, eps_inf=2.25, a=0.07, theta=0.3,
    omega0=5.84, omega_p=5.84 * np.sqrt(5.25 - 2.25), omega_v=1.28,
    gamma=1.1685e-5, gamma_v=29.2 / 32.0,
)

VACUUM_PARAMS = MediumParams(mu=1.0, eps=1.0, eps_inf=1.0)


def matrix_m_1d(e0: ArrayLike, q0: ArrayLike, p: MediumParams) -> ArrayLike:
    """Scalar assembly factor multiplying the E coefficient rates in 1D."""
    return p.eps_inf + 3.0 * p.theta_k * e0 * e0 + p.theta_r * q0


def matrix_m_2d(ex0: ArrayLike, ey0: ArrayLike, q0: ArrayLike, p: MediumParams) -> np.ndarray:
    """Symmetric 2x2 assembly matrix, shape (..., 2, 2)."""
    phix = np.asarray(ex0) ** 2
    phiy = np.asarray(ey0) ** 2
    diag_x = p.eps_inf + p.theta_k * (3.0 * phix + phiy) + p.theta_r * q0
    diag_y = p.eps_inf + p.theta_k * (phix + 3.0 * phiy) + p.theta_r * q0
    off = 2.0 * p.theta_k * np.asarray(ex0) * np.asarray(ey0)
    out = np.empty(np.broadcast_shapes(np.shape(diag_x), np.shape(diag_y), np.shape(off)) + (2, 2))
    out[..., 0, 0] = diag_x
    out[..., 1, 1] = diag_y
    out[..., 0, 1] = off
    out[..., 1, 0] = off
    return out


def matrix_m_3d(
    ex0: ArrayLike, ey0: ArrayLike, ez0: ArrayLike, q0: ArrayLike, p: MediumParams
) -> np.ndarray:
    """Symmetric 3x3 assembly matrix (assembly only; no 3D evolution here).

    Off-diagonals carry the Kerr weight 2*theta_K: that is what the product
    rule on the cubic term produces, and it is the only choice consistent
    with the closed-form pure-Kerr determinant (see the media tests).
    """
    e = [np.asarray(v, dtype=float) for v in (ex0, ey0, ez0)]
    phi = [v * v for v in e]
    total = phi[0] + phi[1] + phi[2]
    shape = np.broadcast_shapes(*(v.shape for v in e), np.shape(q0))
    out = np.empty(shape + (3, 3))
    for i in range(3):
        out[..., i, i] = p.eps_inf + p.theta_k * (total + 2.0 * phi[i]) + p.theta_r * q0
        for j in range(i + 1, 3):
            off = 2.0 * p.theta_k * e[i] * e[j]
            out[..., i, j] = off
            out[..., j, i] = off
    return out


def check_solvability(m: ArrayLike) -> tuple[bool, float]:
    """Positive definiteness by Sylvester's criterion, plus the smallest eigenvalue.

    Accepts a scalar (1D assembly factor) or a symmetric matrix.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim == 0:
        return bool(m > 0), float(m)
    n = m.shape[0]
    ok = all(np.linalg.det(m[:k, :k]) > 0 for k in range(1, n + 1))
    return ok, float(np.min(np.linalg.eigvalsh(m)))


@dataclass(frozen=True)
class InterfaceModel:
    """Diffusive circular interface blending two parameter sets.

    The weight is 0 inside the disc (radius r_gamma around center), 1
    outside, with a C1 cubic transition over an annulus of width delta.
    """

    center: tuple[float, float]
    r_gamma: float
    delta: float
    inside_params: MediumParams
    outside_params: MediumParams

    def __post_init__(self) -> None:
        if self.r_gamma <= 0:
            raise ValueError("r_gamma must be positive")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


def interface_weight(r: ArrayLike, im: InterfaceModel) -> ArrayLike:
    """Blend weight at distance r from the interface center."""
    r = np.asarray(r, dtype=float)
    rt = 0.5 - (r - im.r_gamma) / im.delta
    rt = np.clip(rt, 0.0, 1.0)
    w = 1.0 - 3.0 * rt**2 + 2.0 * rt**3
    return w if w.ndim else float(w)


def blend_params(x: ArrayLike, y: ArrayLike, im: InterfaceModel) -> MediumParams:
    """Material parameters at (x, y): inside set at weight 0, outside at 1.

    The coupling and frequency parameters (a, omega0, omega_p, omega_v) and
    eps_inf blend affinely in the weight; mu and eps are taken from the
    outside set and must coincide between the two sets.
    """
    r = np.hypot(np.asarray(x, dtype=float) - im.center[0], np.asarray(y, dtype=float) - im.center[1])
    w = interface_weight(r, im)
    pin, pout = im.inside_params, im.outside_params

    def mix(attr: str) -> ArrayLike:
        vin = getattr(pin, attr)
        vout = getattr(pout, attr)
        return vin + (vout - vin) * w

    return MediumParams(
        mu=pout.mu,
        eps=pout.eps,
        eps_inf=mix("eps_inf"),
        a=mix("a"),
        theta=pout.theta,
        omega0=mix("omega0"),
        omega_p=mix("omega_p"),
        omega_v=mix("omega_v"),
        gamma=mix("gamma"),
        gamma_v=mix("gamma_v"),
    )


@dataclass(frozen=True)
class EnergyReport:
    """Total field energy and its per-term breakdown."""

    total: float
    components: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        s = sum(self.components.values())
        scale = max(abs(self.total), 1e-300)
        if abs(s - self.total) > 1e-12 * scale:
            raise ValueError(f"component sum {s} does not match total {self.total}")


def energy_density_terms(
    values: dict[str, np.ndarray],
    p: MediumParams,
    sigma_form: str = "vibration",
) -> dict[str, np.ndarray]:
    """Pointwise energy integrand, term by term.

    values maps variable names to arrays of field values at quadrature
    points; 1D uses keys H, E, P, J, Q, S and 2D uses Hz, Ex, Ey, Px, Py,
    Jx, Jy, Q, S. The sigma_form switch selects the vibrational-energy
    interpretation of the S term (default) or the literal printed form.
    """
    if "E" in values:
        h2 = values["H"] ** 2
        e2 = values["E"] ** 2
        p2 = values["P"] ** 2
        j2 = values["J"] ** 2
    else:
        h2 = values["Hz"] ** 2
        e2 = values["Ex"] ** 2 + values["Ey"] ** 2
        p2 = values["Px"] ** 2 + values["Py"] ** 2
        j2 = values["Jx"] ** 2 + values["Jy"] ** 2
    q = values["Q"]
    s = values["S"]

    eps, mu = p.eps, p.mu
    wp2 = np.asarray(p.omega_p, dtype=float) ** 2
    wv2 = np.asarray(p.omega_v, dtype=float) ** 2
    # Guarded reciprocals: where the oscillator is disabled its energy is zero.
    inv_wp2 = np.divide(1.0, wp2, out=np.zeros_like(wp2), where=wp2 > 0)
    inv_wv2 = np.divide(1.0, wv2, out=np.zeros_like(wv2), where=wv2 > 0)
    # A uniformly disabled oscillator must not be asked for polarization energy.
    # Spatially varying media legitimately hit omega_p = 0 pointwise (inside a
    # blended inclusion); there the P/J terms are defined as zero.
    if wp2.ndim == 0 and wp2 == 0 and np.any(np.asarray(p2 + j2) > 0):
        raise ValueError("omega_p = 0 with nonzero P/J fields: polarization energy undefined")

    ath = p.eps * p.a * p.theta
    terms = {
        "magnetic": 0.5 * mu * h2,
        "electric": 0.5 * eps * p.eps_inf * e2,
        "current": 0.5 * eps * inv_wp2 * j2,
        "polarization": 0.5 * eps * np.asarray(p.omega0, dtype=float) ** 2 * inv_wp2 * p2,
        "qe_cross": 0.5 * ath * q * e2,
        "kerr_quartic": 0.75 * p.eps * p.a * (1.0 - p.theta) * e2 * e2,
        "q_square": 0.25 * ath * q * q,
    }
    if sigma_form == "vibration":
        terms["sigma"] = 0.25 * ath * inv_wv2 * s * s
    elif sigma_form == "printed":
        terms["sigma"] = 0.25 * ath * inv_wp2 * s * s
    else:
        raise ValueError(f"unknown sigma_form {sigma_form!r}")
    return terms


def _gauss_legendre_cell(nq: int) -> tuple[np.ndarray, np.ndarray]:
    # Nodes and weights on the reference cell [-1/2, 1/2].
    pts, wts = np.polynomial.legendre.leggauss(nq)
    return pts / 2.0, wts / 2.0


def energy(
    frame: "gridmod.FieldFrame",
    grid: "gridmod.Grid",
    medium: Union[MediumParams, InterfaceModel],
    quad_points: int | None = None,
    sigma_form: str = "vibration",
) -> EnergyReport:
    """Field energy of a frame by composite Gauss-Legendre quadrature.

    Each cell's Hermite interpolants (built at the cell's usable order) are
    evaluated at the quadrature points, the pointwise integrand is summed
    term by term, and the cell sums are accumulated in a fixed order so the
    result is independent of any worker partitioning.

    quad_points defaults to ceil((2 m_max + 3) / 2) points per cell per
    direction and may be raised when the quartic terms need more resolution.
    For a spatially varying medium the parameters are evaluated pointwise at
    the quadrature points.
    """
    nq = quad_points if quad_points is not None else ceil((2 * frame.m_max + 3) / 2)
    xi, w = _gauss_legendre_cell(nq)
    names = frame.var_names
    totals: dict[str, float] = {}

    if frame.dim == 1:
        if isinstance(medium, InterfaceModel):
            raise ValueError("the diffusive interface model is two dimensional")
        dx = grid.dx
        mbar = gridmod.cell_mbar_1d(frame.ms)
        vand = {}
        for m in np.unique(mbar):
            cells = np.nonzero(mbar == m)[0]
            left, right = gridmod.gather_cell_nodes_1d(frame, cells, int(m))
            coeffs = pa.interp_cells_1d(left, right, int(m))
            k = coeffs.shape[-1]
            if k not in vand:
                vand[k] = xi[:, None] ** np.arange(k)
            vals = np.einsum("vck,qk->vcq", coeffs, vand[k], optimize=True)
            values = {name: vals[i] for i, name in enumerate(names)}
            terms = energy_density_terms(values, medium, sigma_form)
            for key, dens in terms.items():
                totals[key] = totals.get(key, 0.0) + float(np.sum(dens * w) * dx)
    else:
        dx, dy = grid.dx, grid.dy
        cx = grid.cell_centers_x(frame.mesh)
        cy = grid.cell_centers_y(frame.mesh)
        mbar = gridmod.cell_mbar_2d(frame.ms)
        w2 = np.outer(w, w)
        for m in np.unique(mbar):
            ci, cj = np.nonzero(mbar == m)
            block = gridmod.gather_cell_nodes_2d(frame, ci, cj, int(m))
            coeffs = pa.interp_cells_2d(block, int(m))
            k = coeffs.shape[-1]
            v1 = xi[:, None] ** np.arange(k)
            vals = np.einsum("vckl,qk,rl->vcqr", coeffs, v1, v1, optimize=True)
            values = {name: vals[i] for i, name in enumerate(names)}
            if isinstance(medium, InterfaceModel):
                xp = cx[ci][:, None, None] + (xi * dx)[None, :, None]
                yp = cy[cj][:, None, None] + (xi * dy)[None, None, :]
                p = blend_params(np.broadcast_to(xp, vals.shape[1:]),
                                 np.broadcast_to(yp, vals.shape[1:]), medium)
            else:
                p = medium
            terms = energy_density_terms(values, p, sigma_form)
            for key, dens in terms.items():
                totals[key] = totals.get(key, 0.0) + float(np.sum(dens * w2) * dx * dy)

    return EnergyReport(total=sum(totals.values()), components=totals)
