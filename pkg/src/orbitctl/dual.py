"""Tagged forward-mode dual numbers.

A :class:`Dual` carries a value and one directional derivative. Duals nest:
the components of a dual may themselves be duals with an older tag, which is
how the Jacobian of a vector field built from gradients (second derivatives
of the input expressions) is obtained exactly. The dual with the newest tag
is always the outermost structure; any operand with an older tag, or a plain
float, is treated as a constant with respect to it.
"""

from __future__ import annotations

import itertools
import math

_tags = itertools.count(1)


def new_tag() -> int:
    return next(_tags)


class EvaluationError(ArithmeticError):
    """Domain error raised during evaluation (division by zero, sqrt < 0)."""


class Dual:
    __slots__ = ("re", "du", "tag")
    __array_ufunc__ = None  # make numpy scalars defer to our reflected ops

    def __init__(self, re, du, tag: int):
        self.re = re
        self.du = du
        self.tag = tag

    def __repr__(self):
        return f"Dual({self.re!r}, {self.du!r}, tag={self.tag})"

    # Binary ops dispatch on the newest tag; see module docstring.

    def __add__(self, other):
        if isinstance(other, Dual):
            if other.tag == self.tag:
                return Dual(self.re + other.re, self.du + other.du, self.tag)
            if other.tag > self.tag:
                return Dual(self + other.re, other.du, other.tag)
        return Dual(self.re + other, self.du, self.tag)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            if other.tag == self.tag:
                return Dual(self.re - other.re, self.du - other.du, self.tag)
            if other.tag > self.tag:
                return Dual(self - other.re, -other.du, other.tag)
        return Dual(self.re - other, self.du, self.tag)

    def __rsub__(self, other):
        # other is a float or an older-tag dual
        return Dual(other - self.re, -self.du, self.tag)

    def __mul__(self, other):
        if isinstance(other, Dual):
            if other.tag == self.tag:
                return Dual(self.re * other.re,
                            self.re * other.du + self.du * other.re, self.tag)
            if other.tag > self.tag:
                return Dual(self * other.re, self * other.du, other.tag)
        return Dual(self.re * other, self.du * other, self.tag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            if other.tag == self.tag:
                if real_part(other.re) == 0.0:
                    raise EvaluationError("division by zero")
                q = self.re / other.re
                return Dual(q, (self.du - q * other.du) / other.re, self.tag)
            if other.tag > self.tag:
                return _reciprocal(other) * self
        if real_part(other) == 0.0:
            raise EvaluationError("division by zero")
        return Dual(self.re / other, self.du / other, self.tag)

    def __rtruediv__(self, other):
        return _reciprocal(self) * other

    def __neg__(self):
        return Dual(-self.re, -self.du, self.tag)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("dual numbers support integer powers only")
        if n == 0:
            return 1.0
        if n < 0:
            return _reciprocal(self ** (-n))
        return Dual(self.re ** n, n * self.re ** (n - 1) * self.du, self.tag)

    def __float__(self):
        return float(real_part(self))


def _reciprocal(x: Dual) -> Dual:
    if real_part(x.re) == 0.0:
        raise EvaluationError("division by zero")
    r = 1.0 / x.re
    return Dual(r, -x.du * r * r, x.tag)


def real_part(x) -> float:
    """Strip every dual layer and return the underlying float."""
    while isinstance(x, Dual):
        x = x.re
    return x


def value_at(x, tag: int):
    """Value of ``x`` with the derivative of ``tag`` removed."""
    if isinstance(x, Dual) and x.tag == tag:
        return x.re
    return x


def derivative_at(x, tag: int):
    """Directional derivative carried by ``tag`` (zero if ``x`` is constant)."""
    if isinstance(x, Dual) and x.tag == tag:
        return x.du
    return 0.0


# Elementary functions, generic over floats and (nested) duals.

def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.re), cos(x.re) * x.du, x.tag)
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.re), -sin(x.re) * x.du, x.tag)
    return math.cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.re)
        return Dual(e, e * x.du, x.tag)
    return math.exp(x)


def sqrt(x):
    if isinstance(x, Dual):
        if real_part(x.re) <= 0.0:
            # derivative undefined at 0, value undefined below
            raise EvaluationError("sqrt of non-positive argument under differentiation")
        s = sqrt(x.re)
        return Dual(s, x.du / (2.0 * s), x.tag)
    if x < 0.0:
        raise EvaluationError(f"sqrt of negative argument {x!r}")
    return math.sqrt(x)


def tanh(x):
    if isinstance(x, Dual):
        t = tanh(x.re)
        return Dual(t, (1.0 - t * t) * x.du, x.tag)
    return math.tanh(x)


FUNCTIONS = {"sin": sin, "cos": cos, "exp": exp, "sqrt": sqrt, "tanh": tanh}
