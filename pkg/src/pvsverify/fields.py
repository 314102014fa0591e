"""The two kinds of base field: the rationals and prime fields F_p."""
from __future__ import annotations

from fractions import Fraction
from functools import total_ordering

from .geometry import InputError


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    f = 2
    while f * f <= n:
        if n % f == 0:
            return False
        f += 1
    return True


@total_ordering
class GFElement:
    """An element of F_p; arithmetic only between elements of the same field."""

    __slots__ = ("v", "p")

    def __init__(self, v: int, p: int):
        self.v = v % p
        self.p = p

    def _coerce(self, other) -> int:
        if isinstance(other, GFElement):
            if other.p != self.p:
                raise InputError(f"mixing F_{self.p} and F_{other.p}")
            return other.v
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else GFElement(self.v + o, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else GFElement(self.v - o, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else GFElement(o - self.v, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else GFElement(self.v * o, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return GFElement(-self.v, self.p)

    def inverse(self) -> "GFElement":
        if self.v == 0:
            raise ZeroDivisionError("inverse of 0 in F_p")
        return GFElement(pow(self.v, self.p - 2, self.p), self.p)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * GFElement(o, self.p).inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else GFElement(o, self.p) * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return GFElement(pow(self.v, e, self.p), self.p)

    def __eq__(self, other):
        if isinstance(other, GFElement):
            return self.p == other.p and self.v == other.v
        if isinstance(other, int):
            return self.v == other % self.p
        return NotImplemented

    def __lt__(self, other):
        # only for deterministic sorting
        return (self.p, self.v) < (other.p, other.v)

    def __hash__(self):
        return hash((self.v, self.p))

    def __bool__(self):
        return self.v != 0

    def __int__(self):
        return self.v

    def __repr__(self):
        return f"{self.v} (mod {self.p})"


class Field:
    tag: str

    def __call__(self, value):
        raise NotImplementedError

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def __eq__(self, other):
        return isinstance(other, Field) and self.tag == other.tag

    def __hash__(self):
        return hash(self.tag)

    def __repr__(self):
        return self.tag

    @staticmethod
    def parse(tag: str) -> "Field":
        t = str(tag).strip()
        if t in ("Q", "QQ"):
            return RATIONALS
        if t.startswith("Fp:") or t.startswith("F"):
            try:
                p = int(t[3:] if t.startswith("Fp:") else t[1:])
            except ValueError as exc:
                raise InputError(f"bad field tag {tag!r}") from exc
            return PrimeField(p)
        raise InputError(f"bad field tag {tag!r}")


class Rationals(Field):
    tag = "Q"

    def __call__(self, value):
        if isinstance(value, GFElement):
            raise InputError("cannot read an F_p element as a rational")
        return Fraction(value)

    def encode(self, value) -> str:
        return str(Fraction(value))


class PrimeField(Field):
    def __init__(self, p: int):
        if not is_prime(p):
            raise InputError(f"{p} is not prime")
        self.p = p
        self.tag = f"Fp:{p}"

    def __call__(self, value):
        if isinstance(value, GFElement):
            if value.p != self.p:
                raise InputError(f"element of F_{value.p} given for F_{self.p}")
            return value
        if isinstance(value, Fraction):
            if value.denominator % self.p == 0:
                raise InputError(f"{value} has no image in F_{self.p}")
            return GFElement(value.numerator, self.p) / value.denominator
        return GFElement(int(value), self.p)

    def elements(self):
        return [GFElement(v, self.p) for v in range(self.p)]

    def encode(self, value) -> int:
        return int(value)


RATIONALS = Rationals()
