"""Symbolic orbit backend.

Points of the curve are written ``sign * x + shift * P0`` for an orbit base
``x``.  Bases are declared by the caller together with a class tag, so no curve
arithmetic is needed; this models an algebraically closed field with a
non-torsion translation point exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import DomainError, OriginBaseMissing, UnregisteredBase


class PointClass(str, Enum):
    GENERIC = "Generic"
    TWO_TORSION = "TwoTorsionNonO"
    ORIGIN = "Origin"
    HALF_P0 = "HalfP0"


@dataclass(frozen=True, order=True)
class BaseLabel:
    id: str
    cls: PointClass

    def __repr__(self):
        return f"{self.id}:{self.cls.value}"


@dataclass(frozen=True, order=True)
class SymbolicPoint:
    """``sign * base + shift * P0``; construct through ``point`` to normalize."""

    base: BaseLabel
    sign: int
    shift: int

    def __repr__(self):
        s = "+" if self.sign > 0 else "-"
        return f"({self.base.id},{s},{self.shift})"


def normalize(base: BaseLabel, sign: int, shift: int) -> SymbolicPoint:
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    if sign == -1:
        if base.cls in (PointClass.ORIGIN, PointClass.TWO_TORSION):
            sign = 1
        elif base.cls is PointClass.HALF_P0:
            # -x = x - P0
            sign, shift = 1, shift - 1
    return SymbolicPoint(base, sign, shift)


point = normalize


class SymbolicCurve:
    """Registry of declared orbit bases; at most one base has class Origin."""

    def __init__(self, bases=()):
        self._bases: dict[str, BaseLabel] = {}
        self.origin: BaseLabel | None = None
        for b in bases:
            self.register(b)

    def register(self, base: BaseLabel) -> BaseLabel:
        old = self._bases.get(base.id)
        if old is not None:
            if old != base:
                raise DomainError(f"base {base.id!r} already registered as {old.cls.value}")
            return old
        if base.cls is PointClass.ORIGIN:
            if self.origin is not None:
                raise DomainError("Origin may be declared only once")
            self.origin = base
        self._bases[base.id] = base
        return base

    def add(self, id: str, cls: PointClass | str) -> BaseLabel:
        return self.register(BaseLabel(id, PointClass(cls)))

    def __contains__(self, base: BaseLabel) -> bool:
        return self._bases.get(base.id) == base

    def __getitem__(self, id: str) -> BaseLabel:
        return self._bases[id]

    def __iter__(self):
        return iter(sorted(self._bases.values()))

    def __len__(self):
        return len(self._bases)

    def check(self, base: BaseLabel) -> None:
        if base not in self:
            raise UnregisteredBase(f"base {base!r} is not registered")

    def require_origin(self) -> BaseLabel:
        if self.origin is None:
            raise OriginBaseMissing("no Origin base registered")
        return self.origin

    def O(self) -> SymbolicPoint:
        return SymbolicPoint(self.require_origin(), 1, 0)

    def P0(self) -> SymbolicPoint:
        return SymbolicPoint(self.require_origin(), 1, 1)

    def to_json(self) -> list:
        return [{"id": b.id, "class": b.cls.value} for b in self]

    @classmethod
    def from_json(cls, obj: list) -> "SymbolicCurve":
        return cls(BaseLabel(str(e["id"]), PointClass(e["class"])) for e in obj)
