"""Dually staggered time stepping with per-cell defect-corrected substeps.

One full step is two half-steps: node data on the current mesh is
interpolated to degree-(2m+1) cell polynomials, each cell's coefficient
system is integrated over dt/2 by a fixed-step fifth-order Runge-Kutta
scheme, and the evolved tensors land on the other mesh's nodes (each cell
center is a node of the opposite mesh). Cells are processed in batches of
equal usable order, because that order fixes both the tensor width and the
substep count.

The substep count grows with the cell order to keep the coefficient ODEs
stable at large m: n_sub = ceil(dt / (2 h^((2 m + 1) / k))) with k = 5 by
default. A hard cap trades the highest-order cells' time accuracy for
speed; a cap of one substep is the documented unstable regime and is
refused unless explicitly forced.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from math import ceil
from typing import Callable, Optional, Union

import numpy as np

from . import grid as gridmod
from . import media as mediamod
from . import padapt
from . import polyalg as pa
from .errors import ConfigError, NonfiniteError, SolvabilityError
from .grid import FieldFrame, Grid
from .media import InterfaceModel, MediumParams
from .rhs1d import rhs_full_1d
from .rhs2d import rhs_full_2d


@dataclass(frozen=True)
class SubstepPolicy:
    """How many inner integrator steps each half-step uses per cell order.

    max_substeps = None means the order-dependent count is used as is.
    unsafe permits a cap of one substep, which is known to go unstable for
    marginally resolved waves; keep it for demonstrating exactly that.
    """

    max_substeps: Optional[int] = None
    exponent: float = 5.0
    unsafe: bool = False

    def __post_init__(self) -> None:
        if self.exponent <= 0:
            raise ConfigError("substep exponent must be positive")
        if self.max_substeps is not None:
            floor = 1 if self.unsafe else 2
            if self.max_substeps < floor:
                raise ConfigError(
                    "max_substeps below 2 is the documented unstable regime; "
                    "pass unsafe=True to run it anyway"
                    if not self.unsafe else "max_substeps must be positive")


def substep_count(dt: float, h: float, mbar: int, policy: SubstepPolicy) -> int:
    """Inner steps for one half-step of a cell with usable order mbar."""
    n = ceil(dt / (2.0 * h ** ((2 * mbar + 1) / policy.exponent)))
    n = max(n, 1)
    if policy.max_substeps is not None:
        n = min(n, policy.max_substeps)
    return n


# Dormand-Prince 5(4) coefficients; only the fifth-order propagation row is
# used, so six evaluations per step and no error estimate.
_C2, _C3, _C4, _C5, _C6 = 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84


def dopri5_integrate(
    f: Callable[[np.ndarray, float], np.ndarray],
    y: np.ndarray,
    t0: float,
    duration: float,
    n_sub: int,
) -> np.ndarray:
    """Integrate y' = f(y, t) over [t0, t0 + duration] in n_sub fixed steps."""
    h = duration / n_sub
    t = t0
    for _ in range(n_sub):
        k1 = f(y, t)
        k2 = f(y + h * (_A21 * k1), t + _C2 * h)
        k3 = f(y + h * (_A31 * k1 + _A32 * k2), t + _C3 * h)
        k4 = f(y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), t + _C4 * h)
        k5 = f(y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), t + _C5 * h)
        k6 = f(y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5),
               t + _C6 * h)
        y = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        t += h
    return y


ForcingFn = Callable[[tuple, tuple, int, float], np.ndarray]
Medium = Union[MediumParams, InterfaceModel]


def half_step(
    frame: FieldFrame,
    grid: Grid,
    medium: Medium,
    adapt: padapt.AdaptConfig,
    policy: SubstepPolicy,
    forcing: Optional[ForcingFn] = None,
    step: Optional[int] = None,
) -> FieldFrame:
    """Advance one half-step onto the opposite mesh.

    forcing(centers, scales, n, t) must return a source tensor of shape
    (n_vars, n_cells, n) in 1D or (n_vars, n_cells, n, n) in 2D for the
    given cell centers, evaluated at the (possibly stage) time t.
    """
    dim = frame.dim
    dt = grid.dt
    out_mesh = "dual" if frame.mesh == "primal" else "primal"
    out = FieldFrame.zeros(frame.var_names, grid, frame.m_max,
                           mesh=out_mesh, time=frame.time + dt / 2)
    cx = grid.cell_centers_x(frame.mesh)
    cy = grid.cell_centers_y(frame.mesh) if dim == 2 else None

    if dim == 1:
        if isinstance(medium, InterfaceModel):
            raise ConfigError("the diffusive interface model is two dimensional")
        mbar = gridmod.cell_mbar_1d(frame.ms)
        nxn = frame.ms.shape[0]
        for m in np.unique(mbar):
            cells = np.nonzero(mbar == m)[0]
            left, right = gridmod.gather_cell_nodes_1d(frame, cells, int(m))
            coeffs = pa.interp_cells_1d(left, right, int(m))
            n = coeffs.shape[-1]
            centers = (cx[cells],)
            scales = (grid.dx,)

            def rate(y, t, _n=n, _centers=centers, _scales=scales):
                src = forcing(_centers, _scales, _n, t) if forcing is not None else None
                return rhs_full_1d(y, grid.dx, medium, forcing=src)

            n_sub = substep_count(dt, grid.h_min, int(m), policy)
            try:
                evolved = dopri5_integrate(rate, coeffs, frame.time, dt / 2, n_sub)
            except SolvabilityError as err:
                err.cell = int(cells[err.cell[0]]) if err.cell else None
                raise
            ms_new = padapt.select_m(evolved, adapt)
            targets = cells if frame.mesh == "primal" else (cells + 1) % nxn
            kc = min(n, frame.m_max + 1)
            out.data[:, targets, :kc] = evolved[..., :kc]
            out.ms[targets] = ms_new
        flat = out.data
        padapt.apply_orders(flat, out.ms)
    else:
        mbar = gridmod.cell_mbar_2d(frame.ms)
        nxn, nyn = frame.ms.shape
        for m in np.unique(mbar):
            ci, cj = np.nonzero(mbar == m)
            block = gridmod.gather_cell_nodes_2d(frame, ci, cj, int(m))
            coeffs = pa.interp_cells_2d(block, int(m))
            n = coeffs.shape[-1]
            xg, yg = cx[ci], cy[cj]
            if isinstance(medium, InterfaceModel):
                p_group = mediamod.blend_params(xg, yg, medium)
            else:
                p_group = medium
            centers = (xg, yg)
            scales = (grid.dx, grid.dy)

            def rate(y, t, _n=n, _centers=centers, _scales=scales, _p=p_group):
                src = forcing(_centers, _scales, _n, t) if forcing is not None else None
                return rhs_full_2d(y, grid.dx, grid.dy, _p, forcing=src)

            n_sub = substep_count(dt, grid.h_min, int(m), policy)
            try:
                evolved = dopri5_integrate(rate, coeffs, frame.time, dt / 2, n_sub)
            except SolvabilityError as err:
                if err.cell:
                    err.cell = (int(ci[err.cell[0]]), int(cj[err.cell[0]]))
                raise
            ms_new = padapt.select_m(evolved, adapt)
            if frame.mesh == "primal":
                ti, tj = ci, cj
            else:
                ti, tj = (ci + 1) % nxn, (cj + 1) % nyn
            kc = min(n, frame.m_max + 1)
            out.data[:, ti, tj, :kc, :kc] = evolved[..., :kc, :kc]
            out.ms[ti, tj] = ms_new
        nv = len(out.var_names)
        kk = frame.m_max + 1
        padapt.apply_orders(out.data.reshape(nv, nxn * nyn, kk, kk),
                            out.ms.reshape(nxn * nyn))

    if not out.finite():
        vals = out.data.reshape(len(out.var_names), -1)
        bad = [name for i, name in enumerate(out.var_names)
               if not np.all(np.isfinite(vals[i]))]
        raise NonfiniteError(
            f"nonfinite values in {', '.join(bad)} at t={out.time:.6g}",
            step=step, time=out.time, variable=bad[0])
    return out


@dataclass
class RunResult:
    """Final state plus the diagnostic rows collected along the way."""

    frame: FieldFrame
    diagnostics: list[dict] = field(default_factory=list)
    wall_time: float = 0.0


def _diag_row(frame: FieldFrame, grid: Grid, medium: Medium, step: int,
              energy_quad: Optional[int], sigma_form: str,
              wall: float = 0.0) -> dict:
    stats = padapt.m_statistics(frame.ms, len(frame.var_names))
    report = mediamod.energy(frame, grid, medium, quad_points=energy_quad,
                             sigma_form=sigma_form)
    per_var = frame.max_abs()
    row = {
        "step": step,
        "time": frame.time,
        "energy": report.total,
        "dof": stats.dof,
        "max_m": stats.max_m,
        "mean_m": round(stats.mean_m, 4),
        "max_abs": float(np.max(per_var)),
    }
    for key, val in report.components.items():
        row[f"energy_{key}"] = val
    for name, val in zip(frame.var_names, per_var):
        row[f"max_{name}"] = float(val)
    row["wall"] = wall
    return row


def run(
    frame0: FieldFrame,
    grid: Grid,
    medium: Medium,
    adapt: padapt.AdaptConfig,
    policy: SubstepPolicy,
    forcing: Optional[ForcingFn] = None,
    diag_every: int = 0,
    energy_quad: Optional[int] = None,
    sigma_form: str = "vibration",
) -> RunResult:
    """March nt full steps from frame0, collecting diagnostics on the way.

    Diagnostics are recorded on integer steps (primal frames): always at the
    start and end, and every diag_every steps in between when positive.
    """
    t_start = _time.perf_counter()
    frame = frame0
    rows = [_diag_row(frame, grid, medium, 0, energy_quad, sigma_form)]
    for step in range(1, grid.nt + 1):
        frame = half_step(frame, grid, medium, adapt, policy, forcing, step=step)
        frame = half_step(frame, grid, medium, adapt, policy, forcing, step=step)
        if step == grid.nt or (diag_every > 0 and step % diag_every == 0):
            rows.append(_diag_row(frame, grid, medium, step, energy_quad, sigma_form,
                                  wall=_time.perf_counter() - t_start))
    return RunResult(frame=frame, diagnostics=rows,
                     wall_time=_time.perf_counter() - t_start)
