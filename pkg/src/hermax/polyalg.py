"""Scaled-coefficient polynomial algebra for cellwise Hermite interpolants.

A cell polynomial of order m is stored through its 2m+2 Taylor coefficients
in the normalized coordinate xi = (x - x_center)/dx, so coefficient k equals
dx^k * d^k f / k! evaluated at the center. Node data uses the same scaling
relative to the node position. Keeping everything in scaled form makes the
interpolation matrices independent of dx and keeps all products well
conditioned for any cell size.

Two-dimensional tensors are (2m+2) x (2m+2) arrays; entry (k, l) multiplies
xi^k * eta^l. All array kernels act on trailing axes so they vectorize over
any number of cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np


def _solve_exact(a: list[list[Fraction]], n: int) -> list[list[Fraction]]:
    # Invert an n x n Fraction matrix by Gauss-Jordan elimination.
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


@lru_cache(maxsize=None)
def _interp_matrices(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact condition and interpolation matrices for order m.

    Returns (A, T): A maps monomial coefficients to stacked scaled endpoint
    data [left_0..left_m, right_0..right_m]; T = A^-1 maps endpoint data to
    coefficients. Built once in exact rational arithmetic, cached as float64.
    """
    if m < 0:
        raise ValueError(f"order m must be nonnegative, got {m}")
    n = 2 * m + 2
    rows: list[list[Fraction]] = []
    for xi0 in (Fraction(-1, 2), Fraction(1, 2)):
        for j in range(m + 1):
            rows.append(
                [Fraction(comb(k, j)) * xi0 ** (k - j) if k >= j else Fraction(0) for k in range(n)]
            )
    inv = _solve_exact(rows, n)
    a = np.array([[float(x) for x in row] for row in rows])
    t = np.array([[float(x) for x in row] for row in inv])
    return a, t


def interp_matrix(m: int) -> np.ndarray:
    """The (2m+2) x (2m+2) matrix taking stacked scaled endpoint data to coefficients."""
    return _interp_matrices(m)[1]


def taylor_shift_matrix(m: int) -> np.ndarray:
    """Inverse of interp_matrix: coefficients back to scaled endpoint data."""
    return _interp_matrices(m)[0]


@dataclass(frozen=True)
class DerivData:
    """Unscaled derivative data at a node: values[k] = d^k f / dx^k."""

    values: np.ndarray
    m: int

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.m + 1,):
            raise ValueError(f"expected {self.m + 1} derivative values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("derivative data contains nonfinite entries")


@dataclass(frozen=True)
class CoeffTensor1D:
    """Coefficients of a degree-(2m+1) cell polynomial in xi."""

    coeffs: np.ndarray
    m: int

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", c)
        if c.shape != (2 * self.m + 2,):
            raise ValueError(f"expected {2 * self.m + 2} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients contain nonfinite entries")


@dataclass(frozen=True)
class CoeffTensor2D:
    """Tensor-product cell polynomial: coeffs[k, l] multiplies xi^k eta^l."""

    coeffs: np.ndarray
    m: int

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", c)
        n = 2 * self.m + 2
        if c.shape != (n, n):
            raise ValueError(f"expected shape {(n, n)}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients contain nonfinite entries")


def scale_derivs(values: np.ndarray, dx: float) -> np.ndarray:
    """Turn unscaled derivatives d^k f into scaled data dx^k d^k f / k! (trailing axis k)."""
    values = np.asarray(values, dtype=float)
    k = np.arange(values.shape[-1])
    fact = np.array([factorial(int(i)) for i in k], dtype=float)
    return values * dx**k / fact


def unscale_derivs(scaled: np.ndarray, dx: float) -> np.ndarray:
    """Inverse of scale_derivs."""
    scaled = np.asarray(scaled, dtype=float)
    k = np.arange(scaled.shape[-1])
    fact = np.array([factorial(int(i)) for i in k], dtype=float)
    return scaled * fact / dx**k


def interp_cells_1d(left_scaled: np.ndarray, right_scaled: np.ndarray, m: int) -> np.ndarray:
    """Vectorized interpolation: scaled endpoint data (..., m+1) each to coefficients (..., 2m+2)."""
    t = interp_matrix(m)
    data = np.concatenate([left_scaled, right_scaled], axis=-1)
    return data @ t.T


def hermite_interp_1d(left: DerivData, right: DerivData, dx: float) -> CoeffTensor1D:
    """Degree-(2m+1) Hermite interpolant from endpoint derivative data.

    Parameters
    ----------
    left, right : DerivData
        Unscaled derivatives through order m at the cell's left and right
        endpoints (xi = -1/2 and +1/2).
    dx : float
        Cell width, must be positive.

    Returns
    -------
    CoeffTensor1D
        The unique polynomial matching all 2m+2 conditions; reproduces any
        polynomial of degree <= 2m+1 exactly.
    """
    if left.m != right.m:
        raise ValueError(f"endpoint orders differ: {left.m} vs {right.m}")
    if dx <= 0:
        raise ValueError(f"dx must be positive, got {dx}")
    c = interp_cells_1d(scale_derivs(left.values, dx), scale_derivs(right.values, dx), left.m)
    return CoeffTensor1D(c, left.m)


def interp_cells_2d(node_block: np.ndarray, m: int) -> np.ndarray:
    """Tensor-product interpolation from stacked scaled corner data.

    node_block has shape (..., 2m+2, 2m+2) where the trailing axes stack
    [left, right] x-data and [bottom, top] y-data: entry (i, j) with
    i = side_x*(m+1)+k, j = side_y*(m+1)+l is the scaled cross derivative
    dx^k dy^l d_x^k d_y^l f / (k! l!) at that corner.
    """
    t = interp_matrix(m)
    return np.einsum("ab,...bc,dc->...ad", t, node_block, t, optimize=True)


def hermite_interp_2d(corners, dx: float, dy: float) -> CoeffTensor2D:
    """Tensor-product Hermite interpolant from 2x2 corner cross-derivative data.

    corners[i][j] is an (m+1, m+1) array of unscaled cross derivatives
    d_x^k d_y^l f at corner (x side i, y side j), i=0 left, j=0 bottom.
    """
    c00 = np.asarray(corners[0][0], dtype=float)
    m = c00.shape[0] - 1
    if dx <= 0 or dy <= 0:
        raise ValueError("cell widths must be positive")
    block = np.empty((2 * m + 2, 2 * m + 2))
    kf = np.array([factorial(k) for k in range(m + 1)], dtype=float)
    sx = dx ** np.arange(m + 1) / kf
    sy = dy ** np.arange(m + 1) / kf
    for i in (0, 1):
        for j in (0, 1):
            d = np.asarray(corners[i][j], dtype=float)
            if d.shape != (m + 1, m + 1):
                raise ValueError(f"corner ({i},{j}) has shape {d.shape}, expected {(m + 1, m + 1)}")
            block[i * (m + 1) : (i + 1) * (m + 1), j * (m + 1) : (j + 1) * (m + 1)] = (
                d * sx[:, None] * sy[None, :]
            )
    return CoeffTensor2D(interp_cells_2d(block, m), m)


def trunc_conv_1d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated product on the trailing axis: c_k = sum_{p<=k} a_p b_{k-p}."""
    n = a.shape[-1]
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for k in range(n):
        out[..., k] = np.einsum("...p,...p->...", a[..., : k + 1], b[..., k::-1])
    return out


def trunc_conv_2d(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated product on the trailing two axes (componentwise index ordering)."""
    n1, n2 = a.shape[-2], a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for i in range(n1):
        for j in range(n2):
            out[..., i:, j:] += a[..., i, j, None, None] * b[..., : n1 - i, : n2 - j]
    return out


def trunc_product_1d(a: CoeffTensor1D, b: CoeffTensor1D) -> CoeffTensor1D:
    """Product of two cell polynomials truncated back to degree 2m+1."""
    if a.m != b.m:
        raise ValueError(f"orders differ: {a.m} vs {b.m}")
    return CoeffTensor1D(trunc_conv_1d(a.coeffs, b.coeffs), a.m)


def trunc_product_2d(a: CoeffTensor2D, b: CoeffTensor2D) -> CoeffTensor2D:
    """2D truncated product, keeping the (2m+2) x (2m+2) index box."""
    if a.m != b.m:
        raise ValueError(f"orders differ: {a.m} vs {b.m}")
    return CoeffTensor2D(trunc_conv_2d(a.coeffs, b.coeffs), a.m)


def coeffs_to_derivs(c: CoeffTensor1D, dx: float, m_out: int) -> DerivData:
    """Read off derivatives at the polynomial's center: values[k] = k! c_k / dx^k."""
    if m_out > c.m:
        raise ValueError(f"m_out={m_out} exceeds polynomial order {c.m}")
    return DerivData(unscale_derivs(c.coeffs[: m_out + 1], dx), m_out)


def eval_poly_1d(coeffs: np.ndarray, xi) -> np.ndarray:
    """Horner evaluation on the trailing axis; xi broadcasts against leading axes."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(np.broadcast_shapes(coeffs.shape[:-1], xi.shape))
    for k in range(coeffs.shape[-1] - 1, -1, -1):
        out = out * xi + coeffs[..., k]
    return out


def eval_poly_2d(coeffs: np.ndarray, xi, eta) -> np.ndarray:
    """Nested Horner evaluation of a tensor-product polynomial."""
    eta = np.asarray(eta, dtype=float)
    # Collapse the eta axis first, then evaluate the remaining 1D polynomial in xi.
    row = np.zeros(np.broadcast_shapes(coeffs.shape[:-1], eta.shape))
    for l in range(coeffs.shape[-1] - 1, -1, -1):
        row = row * eta + coeffs[..., l]
    return eval_poly_1d(row, xi)


def eval_poly(c: CoeffTensor1D | CoeffTensor2D, xi: float, eta: float | None = None) -> float:
    """Evaluate a coefficient tensor at (xi[, eta]).

    Values outside |xi| <= 1/2 are permitted (extrapolation, mainly for
    plotting and diagnostics).
    """
    if isinstance(c, CoeffTensor2D):
        if eta is None:
            raise ValueError("2D evaluation needs eta")
        return float(eval_poly_2d(c.coeffs, xi, eta))
    return float(eval_poly_1d(c.coeffs, xi))
