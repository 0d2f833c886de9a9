"""Truncated Taylor series ("jets") with numpy coefficient arrays.

A :class:`Jet` holds coefficients ``c[k] = f^(k)(u0) / k!`` along axis 0; every
other axis is broadcast elementwise. Used for analytic curve derivatives, the
forward bicycle map on curves and the linkage jet recursion.
"""

from __future__ import annotations

import math

import numpy as np


class Jet:
    __slots__ = ("c",)
    __array_priority__ = 100

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def variable(cls, u, order: int) -> "Jet":
        u = np.asarray(u, dtype=float)
        c = np.zeros((order + 1,) + u.shape)
        c[0] = u
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1,) + value.shape)
        c[0] = value
        return cls(c)

    @classmethod
    def stack(cls, jets, axis: int = -1) -> "Jet":
        order = min(j.order for j in jets)
        arrays = np.broadcast_arrays(*[j.c[: order + 1] for j in jets])
        return cls(np.stack(arrays, axis=axis if axis < 0 else axis + 1))

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def derivatives(self) -> np.ndarray:
        """Coefficients rescaled to plain derivatives ``f^(k)``."""
        fact = np.array([math.factorial(k) for k in range(self.order + 1)], dtype=float)
        return self.c * fact.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[: order + 1])

    def deriv(self) -> "Jet":
        k = np.arange(1, self.order + 1, dtype=float)
        return Jet(self.c[1:] * k.reshape((-1,) + (1,) * (self.c.ndim - 1)))

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.c[(slice(None),) + idx])

    def sum(self, axis: int = -1) -> "Jet":
        return Jet(self.c.sum(axis=axis if axis < 0 else axis + 1))

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        value = np.asarray(other, dtype=float)
        c = np.zeros((self.order + 1,) + np.broadcast_shapes(self.c.shape[1:], value.shape))
        c[0] = value
        return Jet(c)

    def _pair(self, other):
        other = self._coerce(other)
        n = min(self.order, other.order) + 1
        return np.broadcast_arrays(self.c[:n], other.c[:n])

    def __add__(self, other):
        a, b = self._pair(other)
        return Jet(a + b)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        a, b = self._pair(other)
        return Jet(a - b)

    def __rsub__(self, other):
        a, b = self._pair(other)
        return Jet(b - a)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.c * other)
        a, b = self._pair(other)
        shape = np.broadcast_shapes(a.shape, b.shape)
        out = np.zeros(shape)
        for k in range(shape[0]):
            out[k] = np.einsum("i...,i...->...", a[: k + 1], b[k::-1]) if k else a[0] * b[0]
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = Jet.constant(np.ones(self.c.shape[1:]), self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def reciprocal(self) -> "Jet":
        a = self.c
        b = np.zeros_like(a)
        b[0] = 1.0 / a[0]
        for k in range(1, a.shape[0]):
            b[k] = -b[0] * np.einsum("i...,i...->...", a[1 : k + 1], b[k - 1 :: -1])
        return Jet(b)

    def sqrt(self) -> "Jet":
        a = self.c
        b = np.zeros_like(a)
        b[0] = np.sqrt(a[0])
        for k in range(1, a.shape[0]):
            acc = a[k].copy()
            if k > 1:
                acc -= np.einsum("i...,i...->...", b[1:k], b[k - 1 : 0 : -1])
            b[k] = acc / (2.0 * b[0])
        return Jet(b)

    def exp(self) -> "Jet":
        a = self.c
        b = np.zeros_like(a)
        b[0] = np.exp(a[0])
        for k in range(1, a.shape[0]):
            i = np.arange(1, k + 1, dtype=float).reshape((-1,) + (1,) * (a.ndim - 1))
            b[k] = np.einsum("i...,i...->...", i * a[1 : k + 1], b[k - 1 :: -1]) / k
        return Jet(b)

    def sincos(self) -> tuple["Jet", "Jet"]:
        a = self.c
        s = np.zeros_like(a)
        c = np.zeros_like(a)
        s[0] = np.sin(a[0])
        c[0] = np.cos(a[0])
        for k in range(1, a.shape[0]):
            i = np.arange(1, k + 1, dtype=float).reshape((-1,) + (1,) * (a.ndim - 1))
            ia = i * a[1 : k + 1]
            s[k] = np.einsum("i...,i...->...", ia, c[k - 1 :: -1]) / k
            c[k] = -np.einsum("i...,i...->...", ia, s[k - 1 :: -1]) / k
        return Jet(s), Jet(c)

    def sin(self) -> "Jet":
        return self.sincos()[0]

    def cos(self) -> "Jet":
        return self.sincos()[1]

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, shape={self.c.shape[1:]})"


def polyval(coeffs, x: Jet) -> Jet:
    """Horner evaluation of ``sum(coeffs[i] * x**i)`` on a jet."""
    out = Jet.constant(np.full(x.c.shape[1:], float(coeffs[-1])), x.order)
    for a in reversed(coeffs[:-1]):
        out = out * x + float(a)
    return out
