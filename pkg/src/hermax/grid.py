"""Staggered periodic meshes and nodal field storage.

Primal nodes sit at the cell corners of the primal mesh; dual nodes sit at
primal cell centers. A half time step maps data on one mesh to data on the
other. Periodic wrap identifies node N with node 0, so both meshes carry
exactly N distinct nodes per direction.

Node data is stored densely as scaled Taylor data: entry k of a node's
coefficient vector is dx^k d^k f / k! at the node. Entries beyond the node's
adaptive order m are kept at zero so vectorized gathers need no masking.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Periodic uniform grid in 1 or 2 space dimensions."""

    dim: int
    x0: float
    x1: float
    nx: int
    dt: float
    nt: int
    y0: float = 0.0
    y1: float = 0.0
    ny: int = 0

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.nx <= 0 or self.x1 <= self.x0:
            raise ValueError("need nx > 0 and x1 > x0")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.nt < 0:
            raise ValueError("nt must be nonnegative")
        if self.dim == 2 and (self.ny <= 0 or self.y1 <= self.y0):
            raise ValueError("2D grids need ny > 0 and y1 > y0")

    @property
    def dx(self) -> float:
        return (self.x1 - self.x0) / self.nx

    @property
    def dy(self) -> float:
        if self.dim != 2:
            raise AttributeError("dy is undefined on a 1D grid")
        return (self.y1 - self.y0) / self.ny

    @property
    def h_min(self) -> float:
        return self.dx if self.dim == 1 else min(self.dx, self.dy)

    def nodes_x(self, mesh: str) -> np.ndarray:
        off = 0.0 if mesh == "primal" else 0.5
        return self.x0 + (np.arange(self.nx) + off) * self.dx

    def nodes_y(self, mesh: str) -> np.ndarray:
        off = 0.0 if mesh == "primal" else 0.5
        return self.y0 + (np.arange(self.ny) + off) * self.dy

    def cell_centers_x(self, mesh: str) -> np.ndarray:
        """Centers of the cells spanned by the given mesh's nodes.

        Cell c spans nodes c and c+1 (wrapped) on either mesh, so primal
        cell c is centered at dual node c while dual cell c is centered at
        primal node c+1.
        """
        if mesh == "primal":
            return self.nodes_x("dual")
        return self.x0 + ((np.arange(self.nx) + 1) % self.nx) * self.dx

    def cell_centers_y(self, mesh: str) -> np.ndarray:
        if mesh == "primal":
            return self.nodes_y("dual")
        return self.y0 + ((np.arange(self.ny) + 1) % self.ny) * self.dy


@dataclass
class FieldFrame:
    """All node data for one mesh at one time.

    data has shape (n_vars, nx, m_max+1) in 1D and
    (n_vars, nx, ny, m_max+1, m_max+1) in 2D. ms holds each node's adaptive
    order; data entries with any index beyond the node's m are zero.
    """

    mesh: str
    time: float
    var_names: tuple[str, ...]
    m_max: int
    data: np.ndarray
    ms: np.ndarray

    @property
    def dim(self) -> int:
        return self.ms.ndim

    @classmethod
    def zeros(
        cls,
        var_names: tuple[str, ...],
        grid: Grid,
        m_max: int,
        mesh: str = "primal",
        time: float = 0.0,
        m_init: Optional[int] = None,
    ) -> "FieldFrame":
        nv = len(var_names)
        if grid.dim == 1:
            data = np.zeros((nv, grid.nx, m_max + 1))
            ms = np.full(grid.nx, m_max if m_init is None else m_init, dtype=np.int64)
        else:
            data = np.zeros((nv, grid.nx, grid.ny, m_max + 1, m_max + 1))
            ms = np.full((grid.nx, grid.ny), m_max if m_init is None else m_init, dtype=np.int64)
        return cls(mesh=mesh, time=time, var_names=var_names, m_max=m_max, data=data, ms=ms)

    def var(self, name: str) -> np.ndarray:
        return self.data[self.var_names.index(name)]

    def values(self, name: str) -> np.ndarray:
        """Node point values (the order-zero coefficient) of one variable."""
        v = self.var(name)
        return v[..., 0] if self.dim == 1 else v[..., 0, 0]

    def max_abs(self) -> np.ndarray:
        """Max absolute node value per variable (point values only)."""
        vals = self.data[..., 0] if self.dim == 1 else self.data[..., 0, 0]
        return np.max(np.abs(vals.reshape(len(self.var_names), -1)), axis=1)

    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def copy(self) -> "FieldFrame":
        return FieldFrame(self.mesh, self.time, self.var_names, self.m_max,
                          self.data.copy(), self.ms.copy())


def cell_mbar_1d(ms: np.ndarray) -> np.ndarray:
    """Per-cell usable order: minimum of the two vertex orders (periodic)."""
    return np.minimum(ms, np.roll(ms, -1))


def cell_mbar_2d(ms: np.ndarray) -> np.ndarray:
    """Per-cell usable order over the four corners (periodic)."""
    right = np.roll(ms, -1, axis=0)
    up = np.roll(ms, -1, axis=1)
    diag = np.roll(right, -1, axis=1)
    return np.minimum(np.minimum(ms, right), np.minimum(up, diag))


def gather_cell_nodes_1d(frame: FieldFrame, cells: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Left/right scaled node data for the given primal-index cells.

    Cell i of the frame's mesh spans nodes i and i+1 (wrapped). Returns two
    arrays of shape (n_vars, n_cells, m+1).
    """
    nx = frame.data.shape[1]
    left = frame.data[:, cells, : m + 1]
    right = frame.data[:, (cells + 1) % nx, : m + 1]
    return left, right


def gather_cell_nodes_2d(frame: FieldFrame, ci: np.ndarray, cj: np.ndarray, m: int) -> np.ndarray:
    """Stacked corner data block for 2D cells, shape (n_vars, n_cells, 2m+2, 2m+2).

    The trailing axes stack [left, right] x [bottom, top] scaled cross
    derivatives in the layout interp_cells_2d expects.
    """
    nx, ny = frame.ms.shape
    nv = len(frame.var_names)
    k = m + 1
    block = np.empty((nv, ci.size, 2 * k, 2 * k))
    for a in (0, 1):
        for b in (0, 1):
            d = frame.data[:, (ci + a) % nx, (cj + b) % ny, :k, :k]
            block[:, :, a * k : (a + 1) * k, b * k : (b + 1) * k] = d
    return block
