"""Truncated Taylor (jet) arithmetic for exact solutions and forcing terms.

A Jet stores the scaled Taylor coefficients of a function about a point:
entry (k, l) is dx^k dy^l d_x^k d_y^l f / (k! l!), so jet coefficients slot
directly into the solver's node and cell tensors. The leading two axes grade
the x and y orders (univariate jets keep the y axis at length one); trailing
axes hold evaluation points and broadcast like any numpy array.

Coefficients are complex so that closures evaluated at a complex-shifted time
propagate an imaginary part, which `time_derivative` turns into an exact time
derivative (no cancellation error, unlike finite differences).
"""

from __future__ import annotations

import numbers

import numpy as np


class Jet:
    """Bivariate truncated Taylor series with array-valued coefficients."""

    __slots__ = ("coef",)

    def __init__(self, coef: np.ndarray):
        self.coef = np.asarray(coef, dtype=complex)
        if self.coef.ndim < 2:
            raise ValueError("jet coefficients need leading (x, y) order axes")

    @property
    def orders(self) -> tuple[int, int]:
        return self.coef.shape[0], self.coef.shape[1]

    @property
    def real(self) -> np.ndarray:
        """Real coefficient tensor, orders leading."""
        return self.coef.real.copy()

    def _like(self, coef: np.ndarray) -> "Jet":
        return Jet(coef)

    def __add__(self, other):
        if isinstance(other, Jet):
            _check_orders(self, other)
            a, b = _align_points(self.coef, other.coef)
            return self._like(a + b)
        out = self.coef.copy()
        out[0, 0] = out[0, 0] + other
        return self._like(out)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coef)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self._like(self.coef * other)
        _check_orders(self, other)
        n1, n2 = self.orders
        a, b = _align_points(self.coef, other.coef)
        za = _order_support(a)
        zb = _order_support(b)
        if za.sum() > zb.sum():
            a, b, za = b, a, zb
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
        for i, j in np.argwhere(za):
            out[i:, j:] += a[i, j] * b[: n1 - i, : n2 - j]
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self._like(self.coef / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n: int):
        if not isinstance(n, numbers.Integral) or n < 0:
            raise ValueError("jet powers must be nonnegative integers")
        out = const(1.0, *self.orders)
        for _ in range(int(n)):
            out = out * self
        return out


def _check_orders(a: Jet, b: Jet) -> None:
    if a.orders != b.orders:
        raise ValueError(f"jet order mismatch: {a.orders} vs {b.orders}")


def _align_points(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pad trailing singleton axes so point shapes broadcast without touching
    the leading order axes."""
    if a.ndim < b.ndim:
        a = a.reshape(a.shape + (1,) * (b.ndim - a.ndim))
    elif b.ndim < a.ndim:
        b = b.reshape(b.shape + (1,) * (a.ndim - b.ndim))
    return a, b


def _order_support(c: np.ndarray) -> np.ndarray:
    """Boolean (n1, n2) mask of order entries holding any nonzero value.

    The comparison is exact, so entries that are merely tiny (an imaginary
    perturbation from a complex step, say) are kept.
    """
    if c.ndim == 2:
        return c != 0
    return np.any(c != 0, axis=tuple(range(2, c.ndim)))


def _affine_parts(a: "Jet"):
    """Split a jet into (value, x-slope, y-slope) when every other entry is
    zero, or return None. Compositions with an affine argument have closed
    forms that skip the generic recurrences."""
    c = a.coef
    n1, n2 = a.orders
    if n1 > 2 and np.any(c[2:]):
        return None
    if n2 > 2 and np.any(c[:, 2:]):
        return None
    if n1 > 1 and n2 > 1 and np.any(c[1:, 1]):
        return None
    zero = np.zeros_like(c[0, 0])
    p = c[1, 0] if n1 > 1 else zero
    q = c[0, 1] if n2 > 1 else zero
    return c[0, 0], p, q


def _affine_tables(u0, p, q, n1: int, n2: int):
    """Weights p^k/k! and q^l/l! for the affine closed form."""
    wk = [np.ones_like(u0)]
    for k in range(1, n1):
        wk.append(wk[-1] * (p / k))
    wl = [np.ones_like(u0)]
    for l in range(1, n2):
        wl.append(wl[-1] * (q / l))
    return wk, wl


def _affine_compose(cycle, u0, p, q, n1: int, n2: int) -> np.ndarray:
    """coef[k, l] = f^(k+l)(u0) p^k q^l / (k! l!) with f's derivatives
    supplied as a repeating cycle of arrays evaluated at u0."""
    wk, wl = _affine_tables(u0, p, q, n1, n2)
    out = np.zeros((n1, n2) + np.shape(u0), dtype=complex)
    for k in range(n1):
        for l in range(n2):
            out[k, l] = cycle[(k + l) % len(cycle)] * wk[k] * wl[l]
    return out


def seed_x(x, dx: float, n1: int, n2: int = 1) -> Jet:
    """Jet of the coordinate function x with cell scaling dx."""
    x = np.asarray(x, dtype=complex)
    coef = np.zeros((n1, n2) + x.shape, dtype=complex)
    coef[0, 0] = x
    if n1 > 1:
        coef[1, 0] = dx
    return Jet(coef)


def seed_y(y, dy: float, n1: int, n2: int) -> Jet:
    """Jet of the coordinate function y with cell scaling dy."""
    y = np.asarray(y, dtype=complex)
    coef = np.zeros((n1, n2) + y.shape, dtype=complex)
    coef[0, 0] = y
    if n2 > 1:
        coef[0, 1] = dy
    return Jet(coef)


def const(value, n1: int, n2: int = 1) -> Jet:
    value = np.asarray(value, dtype=complex)
    coef = np.zeros((n1, n2) + value.shape, dtype=complex)
    coef[0, 0] = value
    return Jet(coef)


def exp(a: Jet) -> Jet:
    """Exponential by the standard derivative recurrence in both axes."""
    n1, n2 = a.orders
    aff = _affine_parts(a)
    if aff is not None:
        u0, p, q = aff
        return Jet(_affine_compose([np.exp(u0)], u0, p, q, n1, n2))
    c = a.coef
    r = np.zeros(c.shape, dtype=complex)
    r[0, 0] = np.exp(c[0, 0])
    for l in range(1, n2):
        acc = 0.0
        for j in range(1, l + 1):
            acc = acc + j * c[0, j] * r[0, l - j]
        r[0, l] = acc / l
    for k in range(1, n1):
        for l in range(n2):
            acc = 0.0
            for i in range(1, k + 1):
                for j in range(l + 1):
                    acc = acc + i * c[i, j] * r[k - i, l - j]
            r[k, l] = acc / k
    return Jet(r)


def sincos(a: Jet) -> tuple[Jet, Jet]:
    """Sine and cosine of a jet, computed jointly."""
    n1, n2 = a.orders
    aff = _affine_parts(a)
    if aff is not None:
        u0, p, q = aff
        s0 = np.sin(u0)
        c0 = np.cos(u0)
        cyc = [s0, c0, -s0, -c0]
        return (
            Jet(_affine_compose(cyc, u0, p, q, n1, n2)),
            Jet(_affine_compose(cyc[1:] + cyc[:1], u0, p, q, n1, n2)),
        )
    c = a.coef
    s = np.zeros(c.shape, dtype=complex)
    co = np.zeros(c.shape, dtype=complex)
    s[0, 0] = np.sin(c[0, 0])
    co[0, 0] = np.cos(c[0, 0])
    for l in range(1, n2):
        sa = 0.0
        ca = 0.0
        for j in range(1, l + 1):
            sa = sa + j * c[0, j] * co[0, l - j]
            ca = ca + j * c[0, j] * s[0, l - j]
        s[0, l] = sa / l
        co[0, l] = -ca / l
    for k in range(1, n1):
        for l in range(n2):
            sa = 0.0
            ca = 0.0
            for i in range(1, k + 1):
                for j in range(l + 1):
                    sa = sa + i * c[i, j] * co[k - i, l - j]
                    ca = ca + i * c[i, j] * s[k - i, l - j]
            s[k, l] = sa / k
            co[k, l] = -ca / k
    return Jet(s), Jet(co)


def sin(a: Jet) -> Jet:
    return sincos(a)[0]


def cos(a: Jet) -> Jet:
    return sincos(a)[1]


def sinhcosh(a: Jet) -> tuple[Jet, Jet]:
    """Hyperbolic sine and cosine, same recurrence without the sign flip."""
    n1, n2 = a.orders
    aff = _affine_parts(a)
    if aff is not None:
        u0, p, q = aff
        sh0 = np.sinh(u0)
        ch0 = np.cosh(u0)
        return (
            Jet(_affine_compose([sh0, ch0], u0, p, q, n1, n2)),
            Jet(_affine_compose([ch0, sh0], u0, p, q, n1, n2)),
        )
    c = a.coef
    sh = np.zeros(c.shape, dtype=complex)
    ch = np.zeros(c.shape, dtype=complex)
    sh[0, 0] = np.sinh(c[0, 0])
    ch[0, 0] = np.cosh(c[0, 0])
    for l in range(1, n2):
        sa = 0.0
        ca = 0.0
        for j in range(1, l + 1):
            sa = sa + j * c[0, j] * ch[0, l - j]
            ca = ca + j * c[0, j] * sh[0, l - j]
        sh[0, l] = sa / l
        ch[0, l] = ca / l
    for k in range(1, n1):
        for l in range(n2):
            sa = 0.0
            ca = 0.0
            for i in range(1, k + 1):
                for j in range(l + 1):
                    sa = sa + i * c[i, j] * ch[k - i, l - j]
                    ca = ca + i * c[i, j] * sh[k - i, l - j]
            sh[k, l] = sa / k
            ch[k, l] = ca / k
    return Jet(sh), Jet(ch)


def cosh(a: Jet) -> Jet:
    return sinhcosh(a)[1]


def sech(a: Jet) -> Jet:
    return reciprocal(cosh(a))


def reciprocal(v: Jet) -> Jet:
    """1 / v from the convolution identity v * r = 1 (needs v[0,0] != 0)."""
    n1, n2 = v.orders
    c = v.coef
    r = np.zeros(c.shape, dtype=complex)
    inv0 = 1.0 / c[0, 0]
    r[0, 0] = inv0
    for l in range(n2):
        for k in range(n1):
            if k == 0 and l == 0:
                continue
            acc = 0.0
            for i in range(k + 1):
                for j in range(l + 1):
                    if i == 0 and j == 0:
                        continue
                    acc = acc + c[i, j] * r[k - i, l - j]
            r[k, l] = -inv0 * acc
    return Jet(r)


def d_dx(a: Jet, dx: float) -> Jet:
    """Jet of the x-derivative, same orders; the top x row comes out zero.

    With entry (k, l) holding dx^k dy^l d_x^k d_y^l f / (k! l!), the
    derivative's entry (k, l) is (k + 1) a[k + 1, l] / dx. Build `a` one
    order higher than needed when the lost top row matters.
    """
    n1, n2 = a.orders
    out = np.zeros_like(a.coef)
    if n1 > 1:
        k = np.arange(1, n1).reshape((-1, 1) + (1,) * (a.coef.ndim - 2))
        out[:-1] = k * a.coef[1:] / dx
    return Jet(out)


def d_dy(a: Jet, dy: float) -> Jet:
    """Jet of the y-derivative; mirror of d_dx on the second order axis."""
    n1, n2 = a.orders
    out = np.zeros_like(a.coef)
    if n2 > 1:
        l = np.arange(1, n2).reshape((1, -1) + (1,) * (a.coef.ndim - 2))
        out[:, :-1] = l * a.coef[:, 1:] / dy
    return Jet(out)


def time_derivative(build, t: float, h: float = 1e-30):
    """Exact d/dt of a time-parameterized jet closure via a complex step.

    build(t) must evaluate the closure at a (possibly complex) time and
    return a Jet or a plain array; analytic time dependence is assumed.
    """
    out = build(t + 1j * h)
    if isinstance(out, Jet):
        return Jet(out.coef.imag / h)
    return np.imag(np.asarray(out)) / h
