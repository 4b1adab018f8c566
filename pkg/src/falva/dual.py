"""Forward-mode dual numbers.

A ``Dual`` carries a value and one derivative; nesting a Dual inside a
Dual yields exact second partials.  Payloads may be floats, complex
scalars, numpy arrays or further Duals, so the same evaluator runs
pointwise or over whole grids.
"""

from __future__ import annotations

import numpy as np


class Dual:
    __slots__ = ("val", "dot")
    # keep numpy from absorbing Duals into object arrays
    __array_ufunc__ = None

    def __init__(self, val, dot):
        self.val = val
        self.dot = dot

    def __repr__(self):
        return f"Dual({self.val!r}, {self.dot!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.dot + other.dot)
        return Dual(self.val + other, self.dot)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.dot - other.dot)
        return Dual(self.val - other, self.dot)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.dot)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.val * other.dot + self.dot * other.val)
        return Dual(self.val * other, self.dot * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val / other.val,
                        (self.dot * other.val - self.val * other.dot)
                        / (other.val * other.val))
        return Dual(self.val / other, self.dot / other)

    def __rtruediv__(self, other):
        return Dual(other / self.val,
                    -other * self.dot / (self.val * self.val))

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __pos__(self):
        return self


def primal(x):
    """Strip all dual layers, returning the underlying scalar/array value."""
    while isinstance(x, Dual):
        x = x.val
    return x


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.val), cos(x.val) * x.dot)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.val), -sin(x.val) * x.dot)
    return np.cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.val)
        return Dual(e, e * x.dot)
    return np.exp(x)


def log(x):
    # the caller checks the domain of the primal value
    if isinstance(x, Dual):
        return Dual(log(x.val), x.dot / x.val)
    return np.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.val)
        return Dual(s, x.dot / (2.0 * s))
    return np.sqrt(x)


def absval(x):
    # derivative sign(x) is taken piecewise-constant, so nested duals see
    # a locally linear function
    if isinstance(x, Dual):
        sgn = np.sign(np.real(primal(x.val)))
        return Dual(absval(x.val), sgn * x.dot)
    return np.abs(x)


def intpow(x, n: int):
    """x**n by repeated multiplication (n a Python int, possibly negative)."""
    if n == 0:
        return 1.0
    if n < 0:
        return 1.0 / intpow(x, -n)
    out = x
    for _ in range(n - 1):
        out = out * x
    return out
