"""The infinite dihedral group generated by two involutions sigma and sigma1.

Every element has the normal form ``tau^n`` (a translation) or ``tau^n sigma1``
(a reflection), where ``tau = sigma sigma1`` translates points by P0.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .errors import DomainError
from .symbolic import PointClass, SymbolicPoint, normalize


@dataclass(frozen=True, order=True)
class GroupElement:
    reflection: bool
    n: int

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        if not self.reflection:
            return GroupElement(other.reflection, self.n + other.n)
        return GroupElement(not other.reflection, self.n - other.n)

    def inverse(self) -> "GroupElement":
        return self if self.reflection else GroupElement(False, -self.n)

    def __pow__(self, e: int) -> "GroupElement":
        if self.reflection:
            return self if e % 2 else IDENTITY
        return GroupElement(False, self.n * e)

    def to_json(self) -> dict:
        return {"kind": "r" if self.reflection else "t", "n": self.n}

    @classmethod
    def from_json(cls, obj: dict) -> "GroupElement":
        kind = obj["kind"]
        if kind not in ("t", "r"):
            raise DomainError(f"group element kind must be 't' or 'r', got {kind!r}")
        return cls(kind == "r", int(obj["n"]))

    def __repr__(self):
        return f"R({self.n})" if self.reflection else f"T({self.n})"


def T(n: int) -> GroupElement:
    return GroupElement(False, n)


def R(n: int) -> GroupElement:
    return GroupElement(True, n)


IDENTITY = T(0)
SIGMA1 = R(0)
SIGMA = R(1)
TAU = T(1)

_LETTERS = {"sigma": SIGMA, "sigma1": SIGMA1, "s": SIGMA, "s1": SIGMA1}


def g_normalize(word) -> GroupElement:
    """Normal form of a word in the generators ('sigma' / 'sigma1')."""
    g = IDENTITY
    for letter in word:
        try:
            g = g * _LETTERS[letter]
        except KeyError:
            raise DomainError(f"unknown generator {letter!r}") from None
    return g


def g_act(g: GroupElement, p: SymbolicPoint) -> SymbolicPoint:
    if g.reflection:
        return normalize(p.base, -p.sign, g.n - p.shift)
    return SymbolicPoint(p.base, p.sign, p.shift + g.n)


class StabilizerKind(str, Enum):
    TRIVIAL = "Trivial"
    SIGMA1 = "Sigma1Type"
    SIGMA = "SigmaType"
    FULL_TRANSLATION = "FullTranslationType"


class StabilizerInfo(NamedTuple):
    kind: StabilizerKind
    element: GroupElement | None
    case: str


def stabilizer(p: SymbolicPoint) -> StabilizerInfo:
    cls = p.base.cls
    if cls is PointClass.GENERIC:
        return StabilizerInfo(StabilizerKind.TRIVIAL, None, "i")
    if cls is PointClass.HALF_P0:
        return StabilizerInfo(StabilizerKind.SIGMA, R(2 * p.shift + 1), "ii")
    return StabilizerInfo(StabilizerKind.SIGMA1, R(2 * p.shift), "ii")


def orbit_rep(p: SymbolicPoint) -> tuple[SymbolicPoint, GroupElement]:
    rep = SymbolicPoint(p.base, 1, 0)
    g = T(p.shift) if p.sign > 0 else R(p.shift)
    return rep, g


def is_representative(p: SymbolicPoint) -> bool:
    return p.sign == 1 and p.shift == 0
