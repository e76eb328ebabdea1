# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Vectorized forward-mode dual numbers.

A Dual holds a value vector of length n and a gradient matrix of shape (n, m):
row i carries the derivatives of value i with respect to m local seeds. Face
fluxes use two seeds (the heads of the two adjacent cells), boundary fluxes
and cell terms use one. Arithmetic follows the usual dual number rules, which
lets residual and Jacobian come out of one evaluation."""

import numpy as np


def _column(values):
    return np.asarray(values, dtype=float)[..., np.newaxis]


class Dual:
    __slots__ = ("value", "grad")
    # numpy operands defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, value, grad):
        self.value = np.asarray(value, dtype=float)
        grad = np.asarray(grad, dtype=float)
        if grad.ndim == 1:
            grad = grad[:, np.newaxis]
        self.grad = grad

    @classmethod
    def seed(cls, value, index, seeds):
        """Independent variable: derivative one with respect to seed
        `index` out of `seeds`."""
        value = np.asarray(value, dtype=float)
        grad = np.zeros((value.size, seeds))
        grad[:, index] = 1.0
        return cls(value, grad)

    @classmethod
    def constant(cls, value, seeds):
        value = np.asarray(value, dtype=float)
        return cls(value, np.zeros((value.size, seeds)))

    @property
    def seeds(self):
        return self.grad.shape[1]

    def _lift(self, other):
        if isinstance(other, Dual):
            return other
        value = np.broadcast_to(np.asarray(other, dtype=float), self.value.shape)
        return Dual.constant(value, self.seeds)

    def __add__(self, other):
        other = self._lift(other)
        return Dual(self.value + other.value, self.grad + other.grad)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return Dual(self.value - other.value, self.grad - other.grad)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Dual(-self.value, -self.grad)

    def __mul__(self, other):
        if not isinstance(other, Dual):
            return Dual(self.value * other, self.grad * _column(other))
        return Dual(
            self.value * other.value,
            self.grad * _column(other.value) + other.grad * _column(self.value),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Dual):
            return Dual(self.value / other, self.grad / _column(other))
        value = self.value / other.value
        grad = (self.grad - other.grad * _column(value)) / _column(other.value)
        return Dual(value, grad)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, power):
        power = float(power)
        if power == 0.0:
            return Dual(np.ones_like(self.value), np.zeros_like(self.grad))
        value = self.value ** power
        return Dual(value, self.grad * _column(power * self.value ** (power - 1.0)))

    def __len__(self):
        return self.value.size

    def __getitem__(self, index):
        return Dual(self.value[index], self.grad[index])

    def chain(self, value, derivative):
        """Lift a function of self given its value and derivative arrays."""
        return Dual(value, self.grad * _column(derivative))

    def __repr__(self):
        return "Dual(value=%r, grad=%r)" % (self.value, self.grad)


def where(mask, first, second):
    """Elementwise selection between two Duals with the same seed count."""
    mask = np.asarray(mask, dtype=bool)
    return Dual(
        np.where(mask, first.value, second.value),
        np.where(mask[:, np.newaxis], first.grad, second.grad),
    )
