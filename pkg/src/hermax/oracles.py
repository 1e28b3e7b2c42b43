"""Reference solvers for the implicit E row, and the equivalence suites.

The evolution equation for the displacement coefficients is linear in the
E rates (the nonlinearity enters through the current state, not the rate),
so a trustworthy reference is available without any iteration: build the
Jacobian of the constitutive map column by column with complex-step
directional derivatives and hand the dense system to numpy. This shares no
code path with the production index recursion beyond the truncated product
helper, which has its own brute-force tests.

run_suite_1d and run_suite_2d drive the reference against the production
recursion over randomized states; they back both the test suite and the
oracle subcommand of the CLI.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import polyalg as pa
from .media import MediumParams, MMS_PARAMS, SOLITON_PARAMS
from .rhs1d import IE, IH, IJ, IQ, IS, _shift_deriv

CSTEP = 1e-30


def constitutive_coeffs_1d(e: np.ndarray, q: np.ndarray, p: MediumParams) -> np.ndarray:
    """Displacement over eps in coefficient space: eps_inf E + theta_K E^3 + theta_R Q E."""
    cubic = pa.trunc_conv_1d(e, pa.trunc_conv_1d(e, e))
    return p.eps_inf * e + p.theta_k * cubic + p.theta_r * pa.trunc_conv_1d(q, e)


def efield_jacobian_1d(e: np.ndarray, q: np.ndarray, p: MediumParams) -> np.ndarray:
    """d(constitutive)/dE as a dense matrix, batched: output (..., n, n)."""
    n = e.shape[-1]
    out = np.empty(e.shape + (n,))
    for col in range(n):
        pert = e.astype(complex)
        pert[..., col] += 1j * CSTEP
        out[..., col] = np.imag(constitutive_coeffs_1d(pert, q, p)) / CSTEP
    return out


def efield_rate_oracle_1d(
    state: np.ndarray,
    dx: float,
    p: MediumParams,
    forcing: np.ndarray | None = None,
) -> np.ndarray:
    """Reference E rates by dense linear solve, state shape (6, ..., n)."""
    h, e, _, j, q, s = state
    rhs = _shift_deriv(h, dx) / p.eps - j - p.theta_r * pa.trunc_conv_1d(s, e)
    if forcing is not None:
        rhs = rhs + forcing[IE] / p.eps
    jac = efield_jacobian_1d(e, q, p)
    return np.linalg.solve(jac, rhs[..., None])[..., 0]


def constitutive_coeffs_2d(
    ex: np.ndarray, ey: np.ndarray, q: np.ndarray, p: MediumParams
) -> tuple[np.ndarray, np.ndarray]:
    """Both displacement components over eps in 2D coefficient space."""
    phi = pa.trunc_conv_2d(ex, ex) + pa.trunc_conv_2d(ey, ey)
    fx = p.eps_inf * ex + p.theta_k * pa.trunc_conv_2d(phi, ex) + p.theta_r * pa.trunc_conv_2d(q, ex)
    fy = p.eps_inf * ey + p.theta_k * pa.trunc_conv_2d(phi, ey) + p.theta_r * pa.trunc_conv_2d(q, ey)
    return fx, fy


def efield_jacobian_2d(
    ex: np.ndarray, ey: np.ndarray, q: np.ndarray, p: MediumParams
) -> np.ndarray:
    """d(constitutive)/d(Ex, Ey) as one dense matrix per cell, batched.

    The unknown ordering stacks the flattened Ex coefficient box before the
    Ey box, giving a (2 n^2, 2 n^2) matrix. All columns are complex-step
    directional derivatives, evaluated in a single batched call to the
    constitutive map with the perturbation as the leading axis.
    """
    n = ex.shape[-1]
    batch = ex.shape[:-2]
    nsq = n * n
    cols = 2 * nsq

    pex = np.broadcast_to(ex.astype(complex), (cols,) + ex.shape).copy()
    pey = np.broadcast_to(ey.astype(complex), (cols,) + ey.shape).copy()
    idx = np.arange(nsq)
    pex.reshape(cols, -1, nsq)[idx[:, None], :, idx[:, None]] += 1j * CSTEP
    pey.reshape(cols, -1, nsq)[nsq + idx[:, None], :, idx[:, None]] += 1j * CSTEP

    fx, fy = constitutive_coeffs_2d(pex, pey, np.broadcast_to(q, (cols,) + q.shape), p)
    jac = np.empty(batch + (cols, cols))
    jac[..., :nsq, :] = np.moveaxis(fx.imag.reshape((cols,) + batch + (nsq,)), 0, -1) / CSTEP
    jac[..., nsq:, :] = np.moveaxis(fy.imag.reshape((cols,) + batch + (nsq,)), 0, -1) / CSTEP
    return jac


def efield_rate_oracle_2d(
    state: np.ndarray,
    dx: float,
    dy: float,
    p: MediumParams,
    forcing: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Reference E rates in 2D by one dense linear solve per cell.

    The unknown is the stacked vector (Ex rates, Ey rates), flattened over
    the coefficient box; see efield_jacobian_2d for the matrix. state has
    shape (9, ..., n, n).
    """
    from .rhs2d import IEX, IEY, deriv_x, deriv_y

    hz, ex, ey, _, _, jx, jy, q, s = state
    batch = ex.shape[:-2]
    nsq = ex.shape[-1] ** 2

    rx = deriv_y(hz, dy) / p.eps - jx - p.theta_r * pa.trunc_conv_2d(s, ex)
    ry = -deriv_x(hz, dx) / p.eps - jy - p.theta_r * pa.trunc_conv_2d(s, ey)
    if forcing is not None:
        rx = rx + forcing[IEX] / p.eps
        ry = ry + forcing[IEY] / p.eps
    rhs = np.concatenate(
        [rx.reshape(batch + (nsq,)), ry.reshape(batch + (nsq,))], axis=-1
    )

    jac = efield_jacobian_2d(ex, ey, q, p)
    sol = np.linalg.solve(jac, rhs[..., None])[..., 0]
    return sol[..., :nsq].reshape(ex.shape), sol[..., nsq:].reshape(ey.shape)


def displacement_residual_2d(
    state: np.ndarray,
    rates: np.ndarray,
    dx: float,
    dy: float,
    p: MediumParams,
    forcing: np.ndarray | None = None,
) -> float:
    """Maximum residual of both displacement rows along the computed rates."""
    from .rhs2d import IEX, IEY, IHZ, IJX, IJY, IQ2, deriv_x, deriv_y

    ex, ey, q = state[IEX], state[IEY], state[IQ2]
    dex, dey, dq = rates[IEX], rates[IEY], rates[IQ2]
    fx, fy = constitutive_coeffs_2d(
        ex + 1j * CSTEP * dex, ey + 1j * CSTEP * dey, q + 1j * CSTEP * dq, p
    )
    ddx = np.imag(fx) / CSTEP
    ddy = np.imag(fy) / CSTEP
    tx = deriv_y(state[IHZ], dy) / p.eps - state[IJX]
    ty = -deriv_x(state[IHZ], dx) / p.eps - state[IJY]
    if forcing is not None:
        tx = tx + forcing[IEX] / p.eps
        ty = ty + forcing[IEY] / p.eps
    return float(max(np.max(np.abs(ddx - tx)), np.max(np.abs(ddy - ty))))


def displacement_residual_1d(
    state: np.ndarray,
    rates: np.ndarray,
    dx: float,
    p: MediumParams,
    forcing: np.ndarray | None = None,
) -> float:
    """Maximum residual of the displacement row along the computed rates.

    Differentiates the constitutive map in time by a complex step along the
    full rate vector (E and Q both move), so it checks the solved rates
    against the original un-isolated equation.
    """
    e, q = state[IE], state[IQ]
    de, dq = rates[IE], rates[IQ]
    dd = np.imag(
        constitutive_coeffs_1d(e + 1j * CSTEP * de, q + 1j * CSTEP * dq, p)
    ) / CSTEP
    target = _shift_deriv(state[IH], dx) / p.eps - state[IJ]
    if forcing is not None:
        target = target + forcing[IE] / p.eps
    return float(np.max(np.abs(dd - target)))


# ---------------------------------------------------------------------------
# Randomized equivalence suites

SUITE_MEDIA = {"mms": MMS_PARAMS, "soliton": SOLITON_PARAMS}


@dataclass(frozen=True)
class SuiteReport:
    """Outcome of one equivalence suite run.

    worst_sample carries everything needed to regenerate the worst offender
    deterministically: samples are drawn from a child generator keyed on
    (seed, index), so replay does not depend on the samples before it.
    """

    suite: str
    n_samples: int
    seed: int
    tol: float
    worst_rel: float
    worst_sample: Optional[dict]
    elapsed: float

    @property
    def passed(self) -> bool:
        return self.worst_rel <= self.tol


def _draw_spec(seed: int, index: int):
    rng = np.random.default_rng([seed, index])
    m = int(rng.integers(1, 5))
    medium = ("mms", "soliton")[int(rng.integers(0, 2))]
    forced = bool(rng.integers(0, 2))
    return rng, m, medium, forced


def _scaled_diff(diff: float, ref_scale: float) -> float:
    # Relative with a unit floor: the drawn coefficients are O(1), so the
    # floor only matters when the reference happens to be tiny.
    return diff / max(1.0, ref_scale)


def run_suite_1d(n_samples: int = 1000, seed: int = 0, tol: float = 1e-11,
                 corrupt: float = 0.0) -> SuiteReport:
    """Production E-row recursion against the dense solve, randomized.

    Each sample draws an order m <= 4, a medium preset, a cell batch with
    coefficients in [-1, 1], a cell size, and (half the time) a random
    source array. corrupt shifts the production rates by a constant and
    exists for negative-control fixtures only.
    """
    from .rhs1d import rhs_full_1d

    t0 = _time.perf_counter()
    worst_rel = 0.0
    worst: Optional[dict] = None
    for i in range(n_samples):
        rng, m, medium, forced = _draw_spec(seed, i)
        p = SUITE_MEDIA[medium]
        state = rng.uniform(-1.0, 1.0, size=(6, 3, 2 * m + 2))
        dx = float(rng.uniform(0.02, 0.5))
        forcing = rng.uniform(-1.0, 1.0, size=state.shape) if forced else None
        rates = rhs_full_1d(state, dx, p, forcing=forcing)
        ref = efield_rate_oracle_1d(state, dx, p, forcing=forcing)
        diff = float(np.max(np.abs(rates[IE] - ref))) + abs(corrupt)
        rel = _scaled_diff(diff, float(np.max(np.abs(ref))))
        if rel > worst_rel or worst is None:
            worst_rel = rel
            worst = {"suite": "rhs1d", "seed": seed, "index": i, "m": m,
                     "medium": medium, "forced": forced, "dx": dx, "rel": rel}
    return SuiteReport(suite="rhs1d", n_samples=n_samples, seed=seed, tol=tol,
                       worst_rel=worst_rel, worst_sample=worst,
                       elapsed=_time.perf_counter() - t0)


def run_suite_2d(n_samples: int = 500, seed: int = 0, tol: float = 1e-11,
                 corrupt: float = 0.0) -> SuiteReport:
    """2D counterpart of run_suite_1d; checks both displacement components."""
    from .rhs2d import IEX, IEY, rhs_full_2d

    t0 = _time.perf_counter()
    worst_rel = 0.0
    worst: Optional[dict] = None
    for i in range(n_samples):
        rng, m, medium, forced = _draw_spec(seed, i)
        p = SUITE_MEDIA[medium]
        n = 2 * m + 2
        state = rng.uniform(-1.0, 1.0, size=(9, 2, n, n))
        dx = float(rng.uniform(0.02, 0.5))
        dy = float(rng.uniform(0.02, 0.5))
        forcing = rng.uniform(-1.0, 1.0, size=state.shape) if forced else None
        rates = rhs_full_2d(state, dx, dy, p, forcing=forcing)
        ox, oy = efield_rate_oracle_2d(state, dx, dy, p, forcing=forcing)
        diff = max(float(np.max(np.abs(rates[IEX] - ox))),
                   float(np.max(np.abs(rates[IEY] - oy)))) + abs(corrupt)
        scale = max(float(np.max(np.abs(ox))), float(np.max(np.abs(oy))))
        rel = _scaled_diff(diff, scale)
        if rel > worst_rel or worst is None:
            worst_rel = rel
            worst = {"suite": "rhs2d", "seed": seed, "index": i, "m": m,
                     "medium": medium, "forced": forced, "dx": dx, "dy": dy,
                     "rel": rel}
    return SuiteReport(suite="rhs2d", n_samples=n_samples, seed=seed, tol=tol,
                       worst_rel=worst_rel, worst_sample=worst,
                       elapsed=_time.perf_counter() - t0)


SUITES = {"rhs1d": run_suite_1d, "rhs2d": run_suite_2d}
