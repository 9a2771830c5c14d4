"""Concrete short Weierstrass curves over Q and F_p.

Used to cross-validate the symbolic backend: concrete points can be located in
declared orbits (``to_symbolic``) and symbolic points can be evaluated back.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

from .errors import DomainError, NotInKnownOrbits, PointNotOnCurve
from .fields import Field
from .symbolic import BaseLabel, PointClass, SymbolicPoint, normalize


class CurvePoint(NamedTuple):
    x: object
    y: object

    @property
    def is_infinity(self) -> bool:
        return self.x is None


INF = CurvePoint(None, None)


class TorsionWarning(UserWarning):
    """A computation used shifts that wrap around the finite order of P0."""


@dataclass(frozen=True)
class Curve:
    field: Field
    a: object
    b: object
    P0: CurvePoint

    def __post_init__(self):
        f = self.field
        if f.p == 3:
            raise DomainError("concrete curves need characteristic other than 2 and 3")
        object.__setattr__(self, "a", f(self.a))
        object.__setattr__(self, "b", f(self.b))
        if self.P0.is_infinity:
            raise DomainError("P0 must differ from the origin")
        object.__setattr__(self, "P0", CurvePoint(f(self.P0.x), f(self.P0.y)))
        if not 4 * self.a ** 3 + 27 * self.b ** 2:
            raise DomainError("singular curve: 4a^3 + 27b^2 = 0")
        if not self.contains(self.P0):
            raise PointNotOnCurve(f"P0 = {self.P0} is not on the curve")

    def contains(self, P: CurvePoint) -> bool:
        if P.is_infinity:
            return True
        return P.y ** 2 == P.x ** 3 + self.a * P.x + self.b

    def point(self, x, y) -> CurvePoint:
        P = CurvePoint(self.field(x), self.field(y))
        if not self.contains(P):
            raise PointNotOnCurve(f"({x}, {y}) is not on the curve")
        return P

    def p0_order(self) -> int | None:
        """Order of P0 over F_p; None over Q (callers supply a non-torsion P0)."""
        if not self.field.p:
            return None
        n, Q = 1, self.P0
        while not Q.is_infinity:
            Q = ec_add(Q, self.P0, self)
            n += 1
        return n

    def to_json(self) -> dict:
        f = self.field
        return {
            "field": f.to_json(),
            "a": f.scalar_to_json(self.a),
            "b": f.scalar_to_json(self.b),
            "P0": [f.scalar_to_json(self.P0.x), f.scalar_to_json(self.P0.y)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Curve":
        f = Field.from_json(obj["field"])
        x, y = obj["P0"]
        return cls(f, f(obj["a"]), f(obj["b"]), CurvePoint(f(x), f(y)))


def _check(P: CurvePoint, C: Curve) -> None:
    if not C.contains(P):
        raise PointNotOnCurve(f"{P} is not on the curve")


def ec_neg(P: CurvePoint, C: Curve) -> CurvePoint:
    _check(P, C)
    return P if P.is_infinity else CurvePoint(P.x, -P.y)


def ec_add(P: CurvePoint, Q: CurvePoint, C: Curve) -> CurvePoint:
    _check(P, C)
    _check(Q, C)
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    if P.x == Q.x:
        if P.y != Q.y or not P.y:
            return INF
        lam = (3 * P.x ** 2 + C.a) / (2 * P.y)
    else:
        lam = (Q.y - P.y) / (Q.x - P.x)
    x3 = lam ** 2 - P.x - Q.x
    return CurvePoint(x3, lam * (P.x - x3) - P.y)


def ec_mul(n: int, P: CurvePoint, C: Curve) -> CurvePoint:
    _check(P, C)
    if n < 0:
        return ec_neg(ec_mul(-n, P, C), C)
    result, addend = INF, P
    while n:
        if n & 1:
            result = ec_add(result, addend, C)
        addend = ec_add(addend, addend, C)
        n >>= 1
    return result


class Classification(NamedTuple):
    cls: PointClass
    special_multiple: int | None
    complete: bool


def classify_point(p: CurvePoint, C: Curve, bound: int) -> Classification:
    """Class tag of ``p`` plus a bounded search for ``2p = m*P0``.

    ``complete`` is True when the search is conclusive: a multiple was found, or
    over F_p every multiple of P0 lies within the bound.
    """
    _check(p, C)
    twice = ec_add(p, p, C)
    if p.is_infinity:
        cls = PointClass.ORIGIN
    elif twice.is_infinity:
        cls = PointClass.TWO_TORSION
    elif twice == C.P0:
        cls = PointClass.HALF_P0
    else:
        cls = PointClass.GENERIC
    found = None
    for m in sorted(range(-bound, bound + 1), key=lambda k: (abs(k), k)):
        if ec_mul(m, C.P0, C) == twice:
            found = m
            break
    order = C.p0_order()
    complete = found is not None or (order is not None and 2 * bound + 1 >= order)
    return Classification(cls, found, complete)


def evaluate(sp: SymbolicPoint, basis: dict, C: Curve) -> CurvePoint:
    """Concrete point ``sign * x + shift * P0`` for a base id -> point map."""
    x = basis[sp.base.id]
    if sp.sign < 0:
        x = ec_neg(x, C)
    return ec_add(x, ec_mul(sp.shift, C.P0, C), C)


def to_symbolic(p: CurvePoint, basis: list, C: Curve, bound: int) -> SymbolicPoint:
    """Locate ``p`` as ``sign * x + n * P0`` with ``|n| <= bound``.

    ``basis`` is a list of (BaseLabel, CurvePoint) pairs lying in distinct
    orbits.  Over F_p a ``TorsionWarning`` is issued when the bound reaches
    half the order of P0, since the symbolic model is then unfaithful.
    """
    _check(p, C)
    order = C.p0_order()
    if order is not None and 2 * bound >= order:
        warnings.warn(
            f"shift bound {bound} reaches ord(P0)/2 = {order / 2}; result is not symbolic-faithful",
            TorsionWarning,
            stacklevel=2,
        )
    for n in sorted(range(-bound, bound + 1), key=lambda k: (abs(k), k)):
        rest = ec_add(p, ec_mul(-n, C.P0, C), C)
        for label, x in basis:
            if rest == x:
                return normalize(label, 1, n)
            if rest == ec_neg(x, C):
                return normalize(label, -1, n)
    raise NotInKnownOrbits(f"{p} is not within shift {bound} of any declared base")


def check_basis_label(label: BaseLabel, x: CurvePoint, C: Curve, bound: int = 0) -> None:
    """Raise unless the declared class tag of ``label`` matches the point ``x``."""
    got = classify_point(x, C, bound).cls
    if got is not label.cls:
        raise DomainError(f"base {label.id} declared {label.cls.value} but is {got.value}")
