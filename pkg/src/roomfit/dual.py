"""Vectorized forward-mode dual numbers.

A :class:`Dual` carries a float array of values plus a tangent array with one
extra trailing axis of fixed width (the number of differentiation seeds).
Elementwise arithmetic and the reductions needed by the energy terms are
supported; values broadcast exactly like numpy, and tangents follow along.

At non-smooth points (abs at 0, min/max ties) the derivative of one branch
is returned: abs uses sign(0) = 0, and ties in min/max/maximum/minimum pick
the first operand or the lowest index.
"""

from __future__ import annotations

import numpy as np


class Dual:
    __slots__ = ("val", "tan")

    def __init__(self, val, tan):
        self.val = np.asarray(val, dtype=float)
        self.tan = np.asarray(tan, dtype=float)
        if self.tan.shape[:-1] != self.val.shape:
            raise ValueError(
                f"tangent shape {self.tan.shape} does not extend value shape {self.val.shape}"
            )

    @property
    def width(self) -> int:
        return self.tan.shape[-1]

    @staticmethod
    def constant(val, width: int) -> "Dual":
        val = np.asarray(val, dtype=float)
        return Dual(val, np.zeros(val.shape + (width,)))

    @staticmethod
    def seeded(val, seed_index, width: int) -> "Dual":
        """Variable array with unit tangents at the given seed indices.

        ``seed_index`` has the same shape as ``val`` and names, per element,
        which seed slot the element differentiates against.
        """
        val = np.asarray(val, dtype=float)
        seed_index = np.asarray(seed_index)
        tan = np.zeros(val.shape + (width,))
        grid = np.indices(val.shape)
        tan[(*grid, seed_index)] = 1.0
        return Dual(val, tan)

    def _lift(self, other) -> "Dual":
        if isinstance(other, Dual):
            return other
        return Dual.constant(other, self.width)

    def __add__(self, other):
        o = self._lift(other)
        return Dual(self.val + o.val, self.tan + o.tan)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return Dual(self.val - o.val, self.tan - o.tan)

    def __rsub__(self, other):
        o = self._lift(other)
        return Dual(o.val - self.val, o.tan - self.tan)

    def __neg__(self):
        return Dual(-self.val, -self.tan)

    def __mul__(self, other):
        o = self._lift(other)
        return Dual(self.val * o.val, self.tan * o.val[..., None] + o.tan * self.val[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        inv = 1.0 / o.val
        val = self.val * inv
        return Dual(val, (self.tan - o.tan * val[..., None]) * inv[..., None])

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __getitem__(self, idx):
        return Dual(self.val[idx], self.tan[idx])

    def sin(self):
        return Dual(np.sin(self.val), np.cos(self.val)[..., None] * self.tan)

    def cos(self):
        return Dual(np.cos(self.val), -np.sin(self.val)[..., None] * self.tan)

    def sqrt(self):
        root = np.sqrt(self.val)
        return Dual(root, self.tan * (0.5 / root)[..., None])

    def arctan(self):
        return Dual(np.arctan(self.val), self.tan / (1.0 + self.val**2)[..., None])

    def abs(self):
        return Dual(np.abs(self.val), np.sign(self.val)[..., None] * self.tan)

    def reshape(self, *shape):
        flat = tuple(int(s) for s in (shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape))
        return Dual(self.val.reshape(flat), self.tan.reshape(flat + (self.width,)))

    def sum(self, axis=None):
        if axis is None:
            return Dual(self.val.sum(), self.tan.reshape(-1, self.width).sum(axis=0))
        axis = axis % self.val.ndim
        return Dual(self.val.sum(axis=axis), self.tan.sum(axis=axis))

    def min(self, axis: int):
        return self._reduce(axis, np.argmin)

    def max(self, axis: int):
        return self._reduce(axis, np.argmax)

    def _reduce(self, axis: int, arg_fn):
        axis = axis % self.val.ndim
        idx = arg_fn(self.val, axis=axis)
        val = np.take_along_axis(self.val, np.expand_dims(idx, axis), axis=axis).squeeze(axis)
        tan_idx = np.expand_dims(np.expand_dims(idx, axis), -1)
        tan = np.take_along_axis(self.tan, tan_idx, axis=axis).squeeze(axis)
        return Dual(val, tan)


def arctan2(y: Dual, x: Dual) -> Dual:
    val = np.arctan2(y.val, x.val)
    denom = (y.val**2 + x.val**2)[..., None]
    return Dual(val, (x.val[..., None] * y.tan - y.val[..., None] * x.tan) / denom)


def where(mask, a, b) -> Dual:
    """Elementwise select; ``mask`` is a plain boolean array over values."""
    mask = np.asarray(mask, dtype=bool)
    if not isinstance(a, Dual):
        a = b._lift(a)
    if not isinstance(b, Dual):
        b = a._lift(b)
    return Dual(np.where(mask, a.val, b.val), np.where(mask[..., None], a.tan, b.tan))


def maximum(a, b) -> Dual:
    """Elementwise max of duals/constants; ties take the first operand."""
    if not isinstance(a, Dual):
        a = b._lift(a)
    b = a._lift(b)
    return where(a.val >= b.val, a, b)


def minimum(a, b) -> Dual:
    if not isinstance(a, Dual):
        a = b._lift(a)
    b = a._lift(b)
    return where(a.val <= b.val, a, b)


def relu(x: Dual) -> Dual:
    """max(0, x) with zero derivative at the kink."""
    return where(x.val > 0.0, x, Dual.constant(np.zeros_like(x.val), x.width))


def stack(duals: list[Dual], axis: int = 0) -> Dual:
    axis = axis % (duals[0].val.ndim + 1)
    return Dual(
        np.stack([d.val for d in duals], axis=axis),
        np.stack([d.tan for d in duals], axis=axis),
    )


def dot3(a: Dual, b: Dual) -> Dual:
    """Dot product over the last value axis (length-3 vectors)."""
    return (a * b).sum(axis=-1)
