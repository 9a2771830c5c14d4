"""Antisymmetric divisors on the symbolic curve and their canonical forms.

A divisor is antisymmetric when ``sigma`` maps it to its negative.  Modulo the
subgroup H spanned by the divisors

    D_y = (y) + (-y) - (P0 - y) - (P0 + y) - 2(O) + 2(P0),

every antisymmetric divisor equals a unique combination
``sum_x n_x [(x) - (P0 - x)]`` over orbit bases, with ``n_x`` in {0, 1} on
2-torsion bases and ``n_x = 0`` on halves of P0.  ``reduce_canonical`` finds it
and returns a certificate listing the H-generators it used.

Reduction rests on the identity, valid for every orbit base ``x`` and integer m,

    pair_m(x) = pair_{m-1}(x) - 2 pair_0(O) - D_{(m-1)P0 + x},

where ``pair_m(x) = (x + m P0) - sigma(x + m P0)``.  Summing it collapses each
pair onto shift 0 and routes the ``(O) - (P0)`` corrections to the Origin.
"""

from __future__ import annotations

from collections import defaultdict
from typing import NamedTuple

from .dihedral import SIGMA, SIGMA1, GroupElement, T, g_act
from .errors import NotAntisymmetric, NotSigma1Invariant
from .symbolic import BaseLabel, PointClass, SymbolicCurve, SymbolicPoint, normalize


class Divisor:
    """Finite integer combination of normalized symbolic points."""

    __slots__ = ("_c",)

    def __init__(self, coeffs=None):
        c = {}
        for pt, k in (coeffs.items() if isinstance(coeffs, dict) else coeffs or ()):
            if k:
                c[pt] = c.get(pt, 0) + k
        self._c = {pt: k for pt, k in c.items() if k}

    @classmethod
    def point(cls, p: SymbolicPoint, k: int = 1) -> "Divisor":
        return cls({p: k})

    def __getitem__(self, p: SymbolicPoint) -> int:
        return self._c.get(p, 0)

    def items(self):
        return sorted(self._c.items())

    def support(self):
        return sorted(self._c)

    def __len__(self):
        return len(self._c)

    def __bool__(self):
        return bool(self._c)

    def __add__(self, other: "Divisor") -> "Divisor":
        c = dict(self._c)
        for p, k in other._c.items():
            c[p] = c.get(p, 0) + k
        return Divisor(c)

    def __neg__(self) -> "Divisor":
        return Divisor({p: -k for p, k in self._c.items()})

    def __sub__(self, other: "Divisor") -> "Divisor":
        return self + (-other)

    def __rmul__(self, k: int) -> "Divisor":
        return Divisor({p: k * v for p, v in self._c.items()})

    def __eq__(self, other):
        return isinstance(other, Divisor) and self._c == other._c

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def bases(self) -> set:
        return {p.base for p in self._c}

    def __repr__(self):
        if not self._c:
            return "0"
        return " + ".join(f"{k}{p!r}" for p, k in self.items())


ZERO = Divisor()


def div_act(g: GroupElement, D: Divisor) -> Divisor:
    return Divisor({g_act(g, p): k for p, k in D.items()})


def is_antisymmetric(D: Divisor) -> bool:
    return div_act(SIGMA, D) == -D


def h_generator(y: SymbolicPoint, curve: SymbolicCurve) -> Divisor:
    O, P0 = curve.O(), curve.P0()
    c: dict = defaultdict(int)
    c[y] += 1
    c[g_act(SIGMA1, y)] += 1
    c[g_act(SIGMA, y)] -= 1
    c[g_act(T(1), y)] -= 1
    c[O] -= 2
    c[P0] += 2
    return Divisor(c)


def canonical_summand(x: BaseLabel) -> Divisor:
    """The divisor ``(x) - (P0 - x)``; zero when ``2x = P0``."""
    p = SymbolicPoint(x, 1, 0)
    return Divisor.point(p) - Divisor.point(g_act(SIGMA, p))


class CanonicalForm:
    """Coefficients ``n_x`` of ``sum_x n_x [(x) - (P0 - x)]``; zeros dropped."""

    __slots__ = ("n",)

    def __init__(self, n=None):
        self.n = {b: k for b, k in dict(n or {}).items() if k}

    def __getitem__(self, base: BaseLabel) -> int:
        return self.n.get(base, 0)

    def items(self):
        return sorted(self.n.items())

    def expand(self) -> Divisor:
        D = ZERO
        for x, k in self.items():
            D = D + k * canonical_summand(x)
        return D

    def check_class_rules(self) -> None:
        for x, k in self.n.items():
            if x.cls is PointClass.TWO_TORSION and k not in (0, 1):
                raise NotAntisymmetric(f"n_{x.id} = {k} must lie in {{0, 1}} at a 2-torsion base")
            if x.cls is PointClass.HALF_P0 and k:
                raise NotAntisymmetric(f"n_{x.id} = {k} must vanish at a half of P0")

    def __eq__(self, other):
        return isinstance(other, CanonicalForm) and self.n == other.n

    def __hash__(self):
        return hash(frozenset(self.n.items()))

    def __repr__(self):
        return "CanonicalForm({" + ", ".join(f"{b.id}: {k}" for b, k in self.items()) + "})"


class Certificate(NamedTuple):
    steps: tuple  # (SymbolicPoint y, multiplier) pairs

    def total(self, curve: SymbolicCurve) -> Divisor:
        D = ZERO
        for y, m in self.steps:
            D = D + m * h_generator(y, curve)
        return D


def _check_bases(D: Divisor, curve: SymbolicCurve) -> None:
    for b in D.bases():
        curve.check(b)


def _pairs(D: Divisor):
    """Split an antisymmetric divisor into ``(coeff, point)`` with D = sum coeff * pair(point)."""
    seen = set()
    out = []
    for p, k in D.items():
        if p in seen:
            continue
        q = g_act(SIGMA, p)
        seen.add(p)
        seen.add(q)
        if p == q:
            continue
        out.append((k, p) if p.sign > 0 else (-k, q))
    return out


def reduce_canonical(D: Divisor, curve: SymbolicCurve) -> tuple[CanonicalForm, Certificate]:
    _check_bases(D, curve)
    if not is_antisymmetric(D):
        raise NotAntisymmetric("sigma(D) != -D")
    origin = curve.require_origin()
    n: dict = defaultdict(int)
    steps: dict = defaultdict(int)
    for a, p in _pairs(D):
        x, m = p.base, p.shift
        # a * pair_m = a * pair_0 - 2ma * pair_0(O) - a * S_m
        n[x] += a
        n[origin] -= 2 * m * a
        if m > 0:
            for j in range(m):
                steps[SymbolicPoint(x, 1, j)] -= a
        else:
            for j in range(m, 0):
                steps[SymbolicPoint(x, 1, j)] += a
    for x in list(n):
        if x.cls is PointClass.TWO_TORSION:
            # 2 pair_0(x) = 2 pair_0(O) + D_x
            k, r = divmod(n[x], 2)
            n[x] = r
            n[origin] += 2 * k
            steps[SymbolicPoint(x, 1, 0)] += k
        elif x.cls is PointClass.HALF_P0:
            n[x] = 0
    cert = Certificate(tuple(sorted((y, m) for y, m in steps.items() if m)))
    return CanonicalForm(n), cert


class InvariantVector(NamedTuple):
    zsums: dict
    mod4: dict
    origin_inv: int

    def __add__(self, other):
        z = defaultdict(int, self.zsums)
        for b, v in other.zsums.items():
            z[b] += v
        m = defaultdict(int, self.mod4)
        for b, v in other.mod4.items():
            m[b] = (m[b] + v) % 4
        return InvariantVector(
            {b: v for b, v in z.items() if v},
            {b: v for b, v in m.items() if v},
            self.origin_inv + other.origin_inv,
        )


def invariants(D: Divisor) -> InvariantVector:
    z: dict = defaultdict(int)
    m4: dict = defaultdict(int)
    origin_inv = 0
    for p, k in D.items():
        if p.sign > 0:
            z[p.base] += k
        if p.base.cls is PointClass.TWO_TORSION:
            m4[p.base] = (m4[p.base] + (-1) ** (p.shift % 2) * k) % 4
        origin_inv += p.shift * k
    return InvariantVector(
        {b: v for b, v in z.items() if v},
        {b: v for b, v in m4.items() if v},
        origin_inv,
    )


def canonical_from_invariants(inv: InvariantVector, curve: SymbolicCurve) -> CanonicalForm:
    """Reconstruct the canonical form from the three invariants alone."""
    origin = curve.require_origin()
    n = {}
    for b, v in inv.zsums.items():
        if b.cls is PointClass.GENERIC:
            n[b] = v
    for b, v in inv.mod4.items():
        n[b] = (v // 2) % 2
    n[origin] = -inv.origin_inv - sum(v for b, v in n.items() if b != origin)
    return CanonicalForm(n)


def gauge_transform(D: Divisor, Dg: Divisor) -> Divisor:
    if div_act(SIGMA1, Dg) != Dg:
        raise NotSigma1Invariant("gauge divisor must be sigma1-invariant")
    return D + Dg - div_act(SIGMA, Dg)


def sigma1_symmetric(y: SymbolicPoint, curve: SymbolicCurve) -> Divisor:
    """The sigma1-invariant divisor ``(y) + (-y) - 2(O)``."""
    return Divisor.point(y) + Divisor.point(g_act(SIGMA1, y)) - 2 * Divisor.point(curve.O())


def antisymmetric_pair(p: SymbolicPoint, k: int = 1) -> Divisor:
    """``k * [(p) - sigma(p)]``, the building block of antisymmetric divisors."""
    return k * (Divisor.point(p) - Divisor.point(g_act(SIGMA, p)))


def from_terms(terms, curve: SymbolicCurve | None = None) -> Divisor:
    """Divisor from ``(base, sign, shift, coeff)`` tuples, normalizing each point."""
    D = ZERO
    for base, sign, shift, k in terms:
        if curve is not None:
            curve.check(base)
        D = D + Divisor.point(normalize(base, sign, shift), k)
    return D
