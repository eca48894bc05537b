"""Exact rationals extended by +inf and -inf.

Convex convention: inf - inf = inf and 0 * inf = inf.  A concave flag flips
both to -inf.

>>> x = ext("3/4")
>>> x + PINF
ExtendedScalar('+inf')
>>> PINF + NINF
ExtendedScalar('+inf')
>>> add(PINF, NINF, concave=True)
ExtendedScalar('-inf')
>>> str(ext(6) / 4)
'3/2'
"""

from __future__ import annotations

from fractions import Fraction
from functools import total_ordering
from numbers import Rational


@total_ordering
class ExtendedScalar:
    __slots__ = ("kind", "value")

    # kind: -1 for -inf, 0 for finite, +1 for +inf
    def __init__(self, value=None, kind: int = 0):
        if kind:
            self.kind = 1 if kind > 0 else -1
            self.value = None
        else:
            self.kind = 0
            self.value = Fraction(value)

    @property
    def finite(self) -> bool:
        return self.kind == 0

    def is_pinf(self) -> bool:
        return self.kind == 1

    def is_ninf(self) -> bool:
        return self.kind == -1

    def __repr__(self):
        return f"ExtendedScalar({str(self)!r})"

    def __str__(self):
        if self.kind == 1:
            return "+inf"
        if self.kind == -1:
            return "-inf"
        v = self.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"

    def __hash__(self):
        return hash((self.kind, self.value))

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.kind == other.kind and self.value == other.value

    def __lt__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.kind != other.kind:
            return self.kind < other.kind
        return self.kind == 0 and self.value < other.value

    def __neg__(self):
        if self.kind:
            return ExtendedScalar(kind=-self.kind)
        return ExtendedScalar(-self.value)

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return add(self, -other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return add(other, -self)

    def __mul__(self, k):
        if isinstance(k, ExtendedScalar):
            if not k.finite:
                if self.finite:
                    return _scale_inf(k, self.value)
                return ExtendedScalar(kind=self.kind * k.kind)
            k = k.value
        return scale(self, k)

    __rmul__ = __mul__

    def __truediv__(self, n):
        n = Fraction(n)
        if n <= 0:
            raise ZeroDivisionError("division by a non-positive scalar")
        if self.kind:
            return self
        return ExtendedScalar(self.value / n)

    def to_fraction(self) -> Fraction:
        if self.kind:
            raise ValueError(f"{self} is not finite")
        return self.value


def _scale_inf(inf: ExtendedScalar, k: Fraction, concave: bool = False) -> ExtendedScalar:
    if k == 0:
        return PINF if not concave else NINF
    return inf if k > 0 else -inf


def _coerce(x):
    if isinstance(x, ExtendedScalar):
        return x
    if isinstance(x, (int, Rational)):
        return ExtendedScalar(x)
    if isinstance(x, float) and x in (float("inf"), float("-inf")):
        return PINF if x > 0 else NINF
    return NotImplemented


def add(x: ExtendedScalar, y: ExtendedScalar, concave: bool = False) -> ExtendedScalar:
    if x.kind == 0 and y.kind == 0:
        return ExtendedScalar(x.value + y.value)
    if x.kind and y.kind and x.kind != y.kind:
        return NINF if concave else PINF
    return x if x.kind else y


def scale(x: ExtendedScalar, k, concave: bool = False) -> ExtendedScalar:
    """Multiply by a finite rational k; 0 * inf follows the chosen convention."""
    k = Fraction(k)
    if x.kind:
        return _scale_inf(x, k, concave)
    return ExtendedScalar(x.value * k)


def ext_sum(values, concave: bool = False) -> ExtendedScalar:
    total = ZERO
    for v in values:
        total = add(total, v, concave)
    return total


def ext(x) -> ExtendedScalar:
    """Parse ints, Fractions, 'p/q' strings, '+inf'/'-inf' and float infinities."""
    if isinstance(x, ExtendedScalar):
        return x
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("+inf", "inf", "+infinity", "infinity"):
            return PINF
        if s in ("-inf", "-infinity"):
            return NINF
        return ExtendedScalar(Fraction(s))
    if isinstance(x, float):
        if x == float("inf"):
            return PINF
        if x == float("-inf"):
            return NINF
        return ExtendedScalar(Fraction(x))
    return ExtendedScalar(x)


def fmt_rational(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


PINF = ExtendedScalar(kind=1)
NINF = ExtendedScalar(kind=-1)
ZERO = ExtendedScalar(0)
