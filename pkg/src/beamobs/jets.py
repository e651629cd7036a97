"""Truncated mixed-partial tables with exact product/exponential rules.

A jet stores all partials d^{i+j} f / dx^i dt^j up to fixed orders on a batch
of evaluation points.  Products use the two-variable Leibniz rule, so any
polynomial expression in jets is again exact at every retained order; products
of jets with different orders keep the common (minimum) orders.
"""
from __future__ import annotations

from math import comb

import numpy as np

__all__ = ["Jet"]


class Jet:
    """Mixed-partial table d[i, j, ...] = d^{i+j} f / dx^i dt^j."""

    __slots__ = ("d",)

    def __init__(self, table: np.ndarray):
        self.d = np.asarray(table, dtype=float)

    # -- constructors ---------------------------------------------------
    @classmethod
    def constant(cls, value, nx: int, nt: int, shape=()):
        tab = np.zeros((nx + 1, nt + 1) + tuple(shape))
        tab[0, 0] = value
        return cls(tab)

    @property
    def nx(self) -> int:
        return self.d.shape[0] - 1

    @property
    def nt(self) -> int:
        return self.d.shape[1] - 1

    def value(self, i: int = 0, j: int = 0):
        if i > self.nx or j > self.nt:
            raise IndexError(f"partial ({i},{j}) beyond retained orders ({self.nx},{self.nt})")
        return self.d[i, j]

    # -- derivative reindexing (drops one retained order) ---------------
    def dx(self, n: int = 1) -> "Jet":
        if n > self.nx:
            raise IndexError(f"cannot take {n} x-derivatives of a jet of x-order {self.nx}")
        return Jet(self.d[n:])

    def dt(self, n: int = 1) -> "Jet":
        if n > self.nt:
            raise IndexError(f"cannot take {n} t-derivatives of a jet of t-order {self.nt}")
        return Jet(self.d[:, n:])

    # -- ring operations -------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.nx, self.nt, np.shape(self.d[0, 0]))

    def __add__(self, other):
        o = self._coerce(other)
        nx, nt = min(self.nx, o.nx), min(self.nt, o.nt)
        return Jet(self.d[: nx + 1, : nt + 1] + o.d[: nx + 1, : nt + 1])

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.d)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.d * other)
        nx, nt = min(self.nx, other.nx), min(self.nt, other.nt)
        pts = np.broadcast_shapes(self.d.shape[2:], other.d.shape[2:])
        out = np.zeros((nx + 1, nt + 1) + pts)
        for i in range(nx + 1):
            for j in range(nt + 1):
                acc = np.zeros(pts)
                for a in range(i + 1):
                    ca = comb(i, a)
                    for b in range(j + 1):
                        acc = acc + (ca * comb(j, b)) * self.d[a, b] * other.d[i - a, j - b]
                out[i, j] = acc
        return Jet(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 1:
            raise ValueError("jet powers need n >= 1")
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def exp(self) -> "Jet":
        """exp(f) via the recursions (e^f)_x = f_x e^f and (e^f)_t = f_t e^f."""
        nx, nt = self.nx, self.nt
        out = np.zeros_like(self.d)
        out[0, 0] = np.exp(self.d[0, 0])
        for j in range(1, nt + 1):
            acc = np.zeros_like(out[0, 0])
            for b in range(j):
                acc += comb(j - 1, b) * self.d[0, b + 1] * out[0, j - 1 - b]
            out[0, j] = acc
        for i in range(1, nx + 1):
            for j in range(nt + 1):
                acc = np.zeros_like(out[0, 0])
                for a in range(i):
                    ca = comb(i - 1, a)
                    for b in range(j + 1):
                        acc += ca * comb(j, b) * self.d[a + 1, b] * out[i - 1 - a, j - b]
                out[i, j] = acc
        return Jet(out)
