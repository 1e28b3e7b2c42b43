"""Coefficient-space evolution rates for the 1D system.

Within one cell every field is a degree-(2m+1) polynomial in the stretched
coordinate xi = (x - x_c) / dx, stored as scaled Taylor coefficients. The
six variables, in canonical order, are

    H  magnetic field
    E  electric field
    P  linear polarization
    J  polarization current
    Q  vibrational displacement (delayed cubic response)
    S  vibrational velocity

All rows except E are explicit. The E row is implicit because the time
derivative of the displacement couples E' to itself through the cubic terms;
it is solved exactly by an index recursion: at coefficient k the only
unknown is E'_k (lower indices are already computed), so each index costs
one divide by the scalar assembly factor M = eps_inf + 3 theta_K E_0^2 +
theta_R Q_0. No nonlinear iteration anywhere.

Functions are vectorized over a batch of cells: arrays have shape
(6, n_cells, 2m+2).
"""

from __future__ import annotations

import numpy as np

from . import polyalg as pa
from .errors import SolvabilityError
from .media import MediumParams

VARS_1D = ("H", "E", "P", "J", "Q", "S")
IH, IE, IP, IJ, IQ, IS = range(6)

# Assembly factors at or below this are treated as a loss of solvability.
M_TINY = 1e-12


def _shift_deriv(c: np.ndarray, dx: float) -> np.ndarray:
    """Coefficients of the x derivative: out_k = (k+1) c_{k+1} / dx, top row zero."""
    out = np.zeros_like(c)
    n = c.shape[-1]
    out[..., : n - 1] = np.arange(1, n) * c[..., 1:] / dx
    return out


def efield_rates_1d(
    e: np.ndarray,
    q: np.ndarray,
    s: np.ndarray,
    rhs_known: np.ndarray,
    p: MediumParams,
) -> np.ndarray:
    """Solve the implicit E row by the index recursion.

    rhs_known holds everything on the right-hand side that does not involve
    E': the magnetic curl term, minus the polarization current, and any
    source on the displacement row already divided by eps. Shapes are
    (..., n) with the batch leading.

    Raises SolvabilityError if the assembly factor is not safely positive.
    """
    n = e.shape[-1]
    theta_k = p.theta_k
    theta_r = p.theta_r

    m_fac = p.eps_inf + 3.0 * theta_k * e[..., 0] ** 2 + theta_r * q[..., 0]
    if np.any(m_fac <= M_TINY):
        bad = np.unravel_index(np.argmin(m_fac), np.shape(m_fac))
        raise SolvabilityError(
            f"assembly factor {np.min(m_fac):.3e} at cell {bad}",
            e0=float(e[bad + (0,)]), q0=float(q[bad + (0,)]),
            m_value=float(np.min(m_fac)), cell=bad,
        )

    phi = pa.trunc_conv_1d(e, e)
    sigma = pa.trunc_conv_1d(s, e)
    e0 = e[..., 0]

    de = np.zeros_like(e)
    dphi = np.zeros_like(e)
    for k in range(n):
        # Partial convolutions over p < k; the p = k entries of de and dphi
        # are still zero, so the full dot products give exactly the known part.
        rev = slice(k, None, -1)
        pc_e_phi = np.einsum("...p,...p->...", de[..., : k + 1], phi[..., rev])
        pc_e_e = np.einsum("...p,...p->...", de[..., : k + 1], e[..., rev])
        pc_phi_e = np.einsum("...p,...p->...", dphi[..., : k + 1], e[..., rev])
        pc_e_q = np.einsum("...p,...p->...", de[..., : k + 1], q[..., rev])
        known = (
            rhs_known[..., k]
            - theta_r * sigma[..., k]
            - theta_k * (pc_e_phi + 2.0 * e0 * pc_e_e + pc_phi_e)
            - theta_r * pc_e_q
        )
        de[..., k] = known / m_fac
        dphi[..., k] = 2.0 * (pc_e_e + de[..., k] * e0)
    return de


def rhs_full_1d(
    state: np.ndarray,
    dx: float,
    p: MediumParams,
    forcing: np.ndarray | None = None,
) -> np.ndarray:
    """Evolution rates for a batch of cells, state shape (6, n_cells, 2m+2).

    forcing, when given, has the same shape and is interpreted as a source on
    each evolution equation in physical form: the H row is divided by mu and
    the E row by eps (where a current density would enter), the ODE rows add
    directly.
    """
    h, e, pl, j, q, s = state
    phi = pa.trunc_conv_1d(e, e)

    dh = _shift_deriv(e, dx) / p.mu
    dp = j.copy()
    dj = -p.gamma * j - p.omega0**2 * pl + p.omega_p**2 * e
    dq = s.copy()
    ds = -p.gamma_v * s - p.omega_v**2 * q + p.omega_v**2 * phi

    rhs_known = _shift_deriv(h, dx) / p.eps - j
    if forcing is not None:
        dh += forcing[IH] / p.mu
        dp += forcing[IP]
        dj += forcing[IJ]
        dq += forcing[IQ]
        ds += forcing[IS]
        rhs_known = rhs_known + forcing[IE] / p.eps
    de = efield_rates_1d(e, q, s, rhs_known, p)

    return np.stack([dh, de, dp, dj, dq, ds])
