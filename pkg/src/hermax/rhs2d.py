"""Coefficient-space evolution rates for the 2D transverse-magnetic system.

Nine variables per node, in canonical order:

    Hz           out-of-plane magnetic field
    Ex, Ey       in-plane electric field
    Px, Py       linear polarization
    Jx, Jy       polarization current
    Q, S         vibrational displacement and velocity (shared scalar pair)

Cell tensors are (2m+2) x (2m+2) scaled coefficients in the stretched cell
coordinates. The two electric rows are implicit and coupled: at each index
pair (k, l) the unknown is the 2-vector of E rates there, every lower index
having been solved already, so the sweep reduces to a closed-form 2x2 solve
per index. Partial convolutions against the growing rate tensors are kept
in running accumulator arrays: when an index is solved, its contribution is
scattered forward with one strided add per product pair, which keeps the
whole sweep vectorized over the cell batch.
"""

from __future__ import annotations

import numpy as np

from . import polyalg as pa
from .errors import SolvabilityError
from .media import MediumParams

VARS_2D = ("Hz", "Ex", "Ey", "Px", "Py", "Jx", "Jy", "Q", "S")
IHZ, IEX, IEY, IPX, IPY, IJX, IJY, IQ2, IS2 = range(9)

M_TINY = 1e-12


def deriv_x(c: np.ndarray, dx: float) -> np.ndarray:
    """x-derivative coefficients: out_{k,l} = (k+1) c_{k+1,l} / dx."""
    out = np.zeros_like(c)
    n = c.shape[-2]
    out[..., : n - 1, :] = np.arange(1, n)[:, None] * c[..., 1:, :] / dx
    return out


def deriv_y(c: np.ndarray, dy: float) -> np.ndarray:
    """y-derivative coefficients: out_{k,l} = (l+1) c_{k,l+1} / dy."""
    out = np.zeros_like(c)
    n = c.shape[-1]
    out[..., :, : n - 1] = np.arange(1, n) * c[..., :, 1:] / dy
    return out


def _check_definite(mxx, myy, mxy, ex, ey, q):
    det = mxx * myy - mxy * mxy
    bad = (mxx <= M_TINY) | (det <= M_TINY)
    if np.any(bad):
        idx = np.unravel_index(np.argmax(bad), np.shape(bad))
        raise SolvabilityError(
            f"2x2 assembly matrix lost definiteness at cell {idx}: "
            f"diag {float(mxx[idx]):.3e}, det {float(det[idx]):.3e}",
            e0=(float(ex[idx]), float(ey[idx])), q0=float(q[idx]),
            m_value=float(np.min(det)), cell=idx,
        )
    return det


def efield_rates_2d(
    ex: np.ndarray,
    ey: np.ndarray,
    q: np.ndarray,
    bx_known: np.ndarray,
    by_known: np.ndarray,
    p: MediumParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the coupled implicit E rows by the index sweep.

    bx_known / by_known hold the full E'-free right-hand side: curl term,
    minus the polarization current, minus theta_r * (S conv E_alpha), plus
    any displacement-row source over eps. All arrays are (..., n, n).
    """
    n = ex.shape[-1]
    tk, tr = p.theta_k, p.theta_r
    ex00 = ex[..., 0, 0]
    ey00 = ey[..., 0, 0]
    phix00 = ex00**2
    phiy00 = ey00**2

    mxx = p.eps_inf + tk * (3.0 * phix00 + phiy00) + tr * q[..., 0, 0]
    myy = p.eps_inf + tk * (phix00 + 3.0 * phiy00) + tr * q[..., 0, 0]
    mxy = 2.0 * tk * ex00 * ey00
    det = _check_definite(mxx, myy, mxy, ex00, ey00, q[..., 0, 0])

    phi = pa.trunc_conv_2d(ex, ex) + pa.trunc_conv_2d(ey, ey)

    dex = np.zeros_like(ex)
    dey = np.zeros_like(ey)
    # Running partial convolutions: acc_ab[..., k, l] accumulates
    # sum over solved (i, j) of A_{i,j} B_{k-i, l-j}.
    acc_xphi = np.zeros_like(ex)
    acc_yphi = np.zeros_like(ex)
    acc_xx = np.zeros_like(ex)
    acc_yy = np.zeros_like(ex)
    acc_xq = np.zeros_like(ex)
    acc_yq = np.zeros_like(ex)
    acc_px = np.zeros_like(ex)
    acc_py = np.zeros_like(ex)

    for l in range(n):
        for k in range(n):
            cross = acc_xx[..., k, l] + acc_yy[..., k, l]
            bx = (
                bx_known[..., k, l]
                - tk * (acc_xphi[..., k, l] + acc_px[..., k, l] + 2.0 * ex00 * cross)
                - tr * acc_xq[..., k, l]
            )
            by = (
                by_known[..., k, l]
                - tk * (acc_yphi[..., k, l] + acc_py[..., k, l] + 2.0 * ey00 * cross)
                - tr * acc_yq[..., k, l]
            )
            rx = (myy * bx - mxy * by) / det
            ry = (mxx * by - mxy * bx) / det
            dex[..., k, l] = rx
            dey[..., k, l] = ry
            dphi = 2.0 * (cross + rx * ex00 + ry * ey00)

            nk, nl = n - k, n - l
            rxb = rx[..., None, None]
            ryb = ry[..., None, None]
            dpb = dphi[..., None, None]
            acc_xphi[..., k:, l:] += rxb * phi[..., :nk, :nl]
            acc_yphi[..., k:, l:] += ryb * phi[..., :nk, :nl]
            acc_xx[..., k:, l:] += rxb * ex[..., :nk, :nl]
            acc_yy[..., k:, l:] += ryb * ey[..., :nk, :nl]
            acc_xq[..., k:, l:] += rxb * q[..., :nk, :nl]
            acc_yq[..., k:, l:] += ryb * q[..., :nk, :nl]
            acc_px[..., k:, l:] += dpb * ex[..., :nk, :nl]
            acc_py[..., k:, l:] += dpb * ey[..., :nk, :nl]
    return dex, dey


def rhs_full_2d(
    state: np.ndarray,
    dx: float,
    dy: float,
    p: MediumParams,
    forcing: np.ndarray | None = None,
) -> np.ndarray:
    """Evolution rates for a batch of 2D cells, state shape (9, n_cells, n, n).

    forcing follows the same physical-row convention as in 1D: the Hz row is
    divided by mu, the two displacement rows by eps, the ODE rows add as is.

    Material parameters may be per-cell arrays of shape (n_cells,), as
    produced by blending across a diffusive interface.
    """
    hz, ex, ey, px, py, jx, jy, q, s = state

    def cw(v):
        # Broadcast a per-cell parameter against (n_cells, n, n) tensors.
        a = np.asarray(v, dtype=float)
        return a[:, None, None] if a.ndim == 1 else a

    mu, eps = cw(p.mu), cw(p.eps)
    gamma, gamma_v = cw(p.gamma), cw(p.gamma_v)
    w0sq, wpsq, wvsq = cw(p.omega0) ** 2, cw(p.omega_p) ** 2, cw(p.omega_v) ** 2
    theta_r = cw(p.theta_r)

    phix = pa.trunc_conv_2d(ex, ex)
    phiy = pa.trunc_conv_2d(ey, ey)

    dhz = (deriv_y(ex, dy) - deriv_x(ey, dx)) / mu
    dpx = jx.copy()
    dpy = jy.copy()
    djx = -gamma * jx - w0sq * px + wpsq * ex
    djy = -gamma * jy - w0sq * py + wpsq * ey
    dq = s.copy()
    ds = -gamma_v * s - wvsq * q + wvsq * (phix + phiy)

    bx = deriv_y(hz, dy) / eps - jx - theta_r * pa.trunc_conv_2d(s, ex)
    by = -deriv_x(hz, dx) / eps - jy - theta_r * pa.trunc_conv_2d(s, ey)
    if forcing is not None:
        dhz += forcing[IHZ] / mu
        dpx += forcing[IPX]
        dpy += forcing[IPY]
        djx += forcing[IJX]
        djy += forcing[IJY]
        dq += forcing[IQ2]
        ds += forcing[IS2]
        bx = bx + forcing[IEX] / eps
        by = by + forcing[IEY] / eps
    dex, dey = efield_rates_2d(ex, ey, q, bx, by, p)

    return np.stack([dhz, dex, dey, dpx, dpy, djx, djy, dq, ds])
