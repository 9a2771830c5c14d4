"""Exact scalar fields: the rationals and prime fields of odd characteristic.

Rationals are plain ``fractions.Fraction`` values.  Prime-field elements are
``FpElement`` instances that remember their modulus, so mixing elements of two
different fields raises instead of silently reducing.
"""

from __future__ import annotations

import random as _random
from fractions import Fraction


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


class FpElement:
    __slots__ = ("v", "p")

    def __init__(self, v: int, p: int):
        self.v = v % p
        self.p = p

    def _coerce(self, other):
        if isinstance(other, FpElement):
            if other.p != self.p:
                raise ValueError(f"mixing F_{self.p} and F_{other.p}")
            return other.v
        if isinstance(other, int):
            return other % self.p
        if isinstance(other, Fraction):
            return other.numerator * pow(other.denominator, -1, self.p) % self.p
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(self.v + o, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(self.v - o, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(o - self.v, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(self.v * o, self.p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o == 0:
            raise ZeroDivisionError("division by zero in F_p")
        return FpElement(self.v * pow(o, -1, self.p), self.p)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.v == 0:
            raise ZeroDivisionError("division by zero in F_p")
        return FpElement(o * pow(self.v, -1, self.p), self.p)

    def __neg__(self):
        return FpElement(-self.v, self.p)

    def __pos__(self):
        return self

    def __pow__(self, e: int):
        if e < 0:
            if self.v == 0:
                raise ZeroDivisionError("division by zero in F_p")
            return FpElement(pow(pow(self.v, -1, self.p), -e, self.p), self.p)
        return FpElement(pow(self.v, e, self.p), self.p)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return False
        return self.v == o

    def __hash__(self):
        return hash((self.v, self.p))

    def __bool__(self):
        return self.v != 0

    def __int__(self):
        return self.v

    def __repr__(self):
        return f"{self.v} (mod {self.p})"


class Field:
    """A field descriptor: ``Field()`` is Q, ``Field(p)`` is F_p."""

    __slots__ = ("p", "_zero", "_one")

    def __init__(self, p: int = 0):
        if p:
            if p == 2 or not _is_prime(p):
                raise ValueError(f"F_{p}: need an odd prime")
        self.p = p
        self._zero = self(0)
        self._one = self(1)

    @property
    def char(self) -> int:
        return self.p

    @property
    def is_prime_field(self) -> bool:
        return self.p != 0

    def __call__(self, value):
        if self.p:
            if isinstance(value, FpElement):
                if value.p != self.p:
                    raise ValueError(f"element of F_{value.p} given to F_{self.p}")
                return value
            if isinstance(value, str):
                value = Fraction(value)
            if isinstance(value, Fraction):
                if value.denominator % self.p == 0:
                    raise ZeroDivisionError(f"{value} has no image in F_{self.p}")
                return FpElement(value.numerator * pow(value.denominator, -1, self.p), self.p)
            return FpElement(int(value), self.p)
        if isinstance(value, FpElement):
            raise ValueError("prime-field element given to Q")
        return Fraction(value)

    @property
    def zero(self):
        return self._zero

    @property
    def one(self):
        return self._one

    def elements(self):
        if not self.p:
            raise ValueError("Q is infinite")
        return [FpElement(v, self.p) for v in range(self.p)]

    def random(self, rng: _random.Random, bound: int = 5):
        if self.p:
            return FpElement(rng.randrange(self.p), self.p)
        return Fraction(rng.randint(-bound, bound))

    def random_nonzero(self, rng: _random.Random, bound: int = 5):
        while True:
            c = self.random(rng, bound)
            if c:
                return c

    def scalar_to_json(self, value):
        if self.p:
            return int(self(value))
        return str(Fraction(value))

    def to_json(self) -> dict:
        return {"type": "Fp", "p": self.p} if self.p else {"type": "Q"}

    @classmethod
    def from_json(cls, obj: dict) -> "Field":
        kind = obj.get("type")
        if kind == "Q":
            return cls()
        if kind == "Fp":
            return cls(int(obj["p"]))
        raise ValueError(f"unknown field type {kind!r}")

    @classmethod
    def parse(cls, text: str) -> "Field":
        """Parse ``Q`` or ``Fp:<p>``."""
        if text == "Q":
            return cls()
        if text.startswith("Fp:"):
            return cls(int(text[3:]))
        raise ValueError(f"field must be Q or Fp:<p>, got {text!r}")

    def __eq__(self, other):
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self):
        return hash(("field", self.p))

    def __repr__(self):
        return f"F_{self.p}" if self.p else "Q"


QQ = Field()
