"""
Dual numbers for forward-mode differentiation

A Dual carries a real value and a vector of directional derivatives, so a
single evaluation pass yields as many derivative directions as were seeded.
The module-level math functions accept plain floats or Duals, which lets the
same compiled expression run in both modes.
"""

import math
from typing import Union

import numpy as np


class Dual:
    """Value ``re`` plus derivative vector ``d`` (one entry per seeded direction)"""

    __slots__ = ("re", "d")

    def __init__(self, re: float, d):
        self.re = float(re)
        self.d = np.asarray(d, dtype=float)

    @classmethod
    def constant(cls, value: float, n_dirs: int) -> "Dual":
        return cls(value, np.zeros(n_dirs))

    @classmethod
    def seeded(cls, value: float, n_dirs: int, direction: int) -> "Dual":
        d = np.zeros(n_dirs)
        d[direction] = 1.0
        return cls(value, d)

    def __repr__(self):
        return f"Dual({self.re!r}, {self.d.tolist()!r})"

    # arithmetic

    def __neg__(self):
        return Dual(-self.re, -self.d)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re + other.re, self.d + other.d)
        return Dual(self.re + other, self.d)

    def __radd__(self, other):
        return Dual(other + self.re, self.d)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re - other.re, self.d - other.d)
        return Dual(self.re - other, self.d)

    def __rsub__(self, other):
        return Dual(other - self.re, -self.d)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re * other.re, self.re * other.d + other.re * self.d)
        return Dual(self.re * other, self.d * other)

    def __rmul__(self, other):
        return Dual(other * self.re, other * self.d)

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.re / other.re,
                (self.d * other.re - self.re * other.d) / (other.re * other.re),
            )
        return Dual(self.re / other, self.d / other)

    def __rtruediv__(self, other):
        return Dual(other / self.re, (-other * self.d) / (self.re * self.re))

    def __pow__(self, power):
        if isinstance(power, int) or (isinstance(power, float) and power.is_integer()):
            return int_power(self, int(power))
        return exp(power * log(self))

    # elementary functions

    def sin(self):
        return Dual(math.sin(self.re), math.cos(self.re) * self.d)

    def cos(self):
        return Dual(math.cos(self.re), -math.sin(self.re) * self.d)

    def exp(self):
        e = math.exp(self.re)
        return Dual(e, e * self.d)

    def log(self):
        return Dual(math.log(self.re), self.d / self.re)

    def sqrt(self):
        s = math.sqrt(self.re)
        return Dual(s, self.d / (2.0 * s))

    def __abs__(self):
        return Dual(abs(self.re), math.copysign(1.0, self.re) * self.d)


Number = Union[float, Dual]


def real_part(x: Number) -> float:
    return x.re if isinstance(x, Dual) else float(x)


def is_dual(x) -> bool:
    return isinstance(x, Dual)


def sin(x: Number) -> Number:
    return x.sin() if isinstance(x, Dual) else math.sin(x)


def cos(x: Number) -> Number:
    return x.cos() if isinstance(x, Dual) else math.cos(x)


def exp(x: Number) -> Number:
    return x.exp() if isinstance(x, Dual) else math.exp(x)


def log(x: Number) -> Number:
    return x.log() if isinstance(x, Dual) else math.log(x)


def sqrt(x: Number) -> Number:
    return x.sqrt() if isinstance(x, Dual) else math.sqrt(x)


def fabs(x: Number) -> Number:
    return abs(x)


def int_power(x: Number, k: int) -> Number:
    """x**k by repeated multiplication (square and multiply, exact for duals too)"""
    if k == 0:
        return 1.0
    if k < 0:
        return 1.0 / int_power(x, -k)
    result = None
    base = x
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return result


UNARY_FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "abs": fabs,
}
