"""Random instance generators shared by the test modules."""

from __future__ import annotations

import random

from ellmod import linalg
from ellmod.descent import DoubleCoverModule, jordan_module
from ellmod.divisor import ZERO, CanonicalForm, antisymmetric_pair
from ellmod.quotring import ModulePresentation
from ellmod.symbolic import PointClass, SymbolicCurve, normalize


def standard_curve() -> SymbolicCurve:
    """One base of every class, plus a second generic base."""
    C = SymbolicCurve()
    C.add("O", PointClass.ORIGIN)
    C.add("g", PointClass.GENERIC)
    C.add("g2", PointClass.GENERIC)
    C.add("t", PointClass.TWO_TORSION)
    C.add("h", PointClass.HALF_P0)
    return C


def random_point(curve: SymbolicCurve, rng: random.Random, shift: int = 5, bases=None):
    base = rng.choice(list(bases if bases is not None else curve))
    return normalize(base, rng.choice((1, -1)), rng.randint(-shift, shift))


def random_antisymmetric(curve: SymbolicCurve, rng: random.Random, max_orbits: int = 4,
                         coeff: int = 5, shift: int = 5, terms: int = 4):
    """Sum of random multiples of (p) - sigma(p) on at most ``max_orbits`` orbits."""
    bases = rng.sample(list(curve), rng.randint(1, min(max_orbits, len(curve))))
    D = ZERO
    for _ in range(rng.randint(1, terms)):
        p = random_point(curve, rng, shift, bases)
        D = D + antisymmetric_pair(p, rng.randint(-coeff, coeff))
    return D, bases


def random_canonical(curve: SymbolicCurve, rng: random.Random, bound: int = 4) -> CanonicalForm:
    n = {}
    for b in curve:
        if b.cls is PointClass.TWO_TORSION:
            n[b] = rng.randint(0, 1)
        elif b.cls is not PointClass.HALF_P0:
            n[b] = rng.randint(-bound, bound)
    return CanonicalForm(n)


def random_change_of_basis(field, d: int, rng: random.Random):
    while True:
        P = [[field(rng.randint(-2, 2)) for _ in range(d)] for _ in range(d)]
        Pi = linalg.inverse(P, field)
        if Pi is not None:
            return P, Pi


def random_base_module(field, rng: random.Random, max_dim: int = 4, N=None) -> ModulePresentation:
    """A k[x]/(x^N)-module of dimension <= max_dim with nilpotent x in a random basis."""
    parts = []
    total = rng.randint(1, max_dim)
    while sum(parts) < total:
        parts.append(rng.randint(1, total - sum(parts)))
    M = jordan_module(field, parts, N or max(parts))
    P, Pi = random_change_of_basis(field, M.dim, rng)
    X = linalg.matmul(Pi, linalg.matmul(M.actions["x"], P, field), field)
    return ModulePresentation.from_matrices(M.ring, {"x": X})


def rebased_cover(N: DoubleCoverModule, rng: random.Random) -> DoubleCoverModule:
    """The same double-cover module written in a random basis."""
    field = N.module.field
    P, Pi = random_change_of_basis(field, N.dim, rng)
    Y = linalg.matmul(Pi, linalg.matmul(N.y, P, field), field)
    S = linalg.matmul(Pi, linalg.matmul(N.sigma_bar, P, field), field)
    return DoubleCoverModule.from_matrices(field, Y, S, N.module.ring.params["N"])
