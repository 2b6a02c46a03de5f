from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

Rational = Fraction | int


def rational_sqrt(x: Fraction) -> Fraction | None:
    """Exact square root of a nonnegative rational, or None if it is irrational."""
    if x < 0:
        return None
    num, den = x.numerator, x.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


class RadicandMismatch(ValueError):
    """Raised when combining values from different quadratic extensions."""
    pass


@dataclass(frozen=True)
class QuadExtValue:
    """The real number u + v*sqrt(d), with sqrt(d) the nonnegative root.

    Build values with `make` so that perfect-square radicands collapse to
    plain rationals; a value with v == 0 always carries d == 0.
    """

    u: Fraction
    v: Fraction = Fraction(0)
    d: Fraction = Fraction(0)

    @classmethod
    def make(cls, u: Rational, v: Rational = 0, d: Rational = 0) -> "QuadExtValue":
        u, v, d = Fraction(u), Fraction(v), Fraction(d)
        if d < 0:
            raise ValueError(f"negative radicand: {d}")
        if v == 0 or d == 0:
            return cls(u)
        root = rational_sqrt(d)
        if root is not None:
            return cls(u + v * root)
        return cls(u, v, d)

    @classmethod
    def sqrt_of(cls, x: Rational) -> "QuadExtValue":
        return cls.make(0, 1, x)

    @property
    def is_rational(self) -> bool:
        return self.v == 0

    def is_zero(self) -> bool:
        return self.u == 0 and self.v == 0

    def sign(self) -> int:
        su, sv = _sign(self.u), _sign(self.v)
        if sv == 0:
            return su
        if su == 0 or su == sv:
            return sv
        lhs, rhs = self.u * self.u, self.v * self.v * self.d
        if lhs == rhs:
            return 0
        return su if lhs > rhs else sv

    def _align(self, other: "QuadExtValue") -> tuple["QuadExtValue", "QuadExtValue"]:
        if self.is_rational or other.is_rational or self.d == other.d:
            return self, other
        ratio = rational_sqrt(other.d / self.d)
        if ratio is None:
            raise RadicandMismatch(f"incompatible radicands {self.d} and {other.d}")
        # v*sqrt(d2) = v*r*sqrt(d1) when d2 = r^2 * d1
        return self, QuadExtValue(other.u, other.v * ratio, self.d)

    def _radicand(self, other: "QuadExtValue") -> Fraction:
        return self.d if not self.is_rational else other.d

    def __add__(self, other: "QuadExtValue") -> "QuadExtValue":
        x, y = self._align(other)
        return QuadExtValue.make(x.u + y.u, x.v + y.v, x._radicand(y))

    def __neg__(self) -> "QuadExtValue":
        return QuadExtValue(-self.u, -self.v, self.d)

    def __sub__(self, other: "QuadExtValue") -> "QuadExtValue":
        return self + (-other)

    def __mul__(self, other: "QuadExtValue") -> "QuadExtValue":
        x, y = self._align(other)
        d = x._radicand(y)
        return QuadExtValue.make(x.u * y.u + x.v * y.v * d, x.u * y.v + x.v * y.u, d)

    def conjugate(self) -> "QuadExtValue":
        return QuadExtValue(self.u, -self.v, self.d)

    def __truediv__(self, other: "QuadExtValue") -> "QuadExtValue":
        if other.is_zero():
            raise ZeroDivisionError("division by an exact zero")
        norm = other.u * other.u - other.v * other.v * other.d
        numerator = self * other.conjugate()
        return QuadExtValue.make(numerator.u / norm, numerator.v / norm, numerator.d)

    def __str__(self) -> str:
        if self.is_rational:
            return str(self.u)
        return f"{self.u} + {self.v}*sqrt({self.d})"
