"""Registered zero-dimensional quotient rings and finite module presentations.

A ``QuotRing`` is a polynomial ring modulo an ideal given by a Groebner basis
for the graded-lex order in which later variables rank higher.  The basis is
checked at construction: every S-polynomial must reduce to zero and every
variable must have a pure power among the leading monomials.  Only the
instances built by the factories at the bottom of this module are registered.

A ``ModulePresentation`` is a quotient of a free module by relations, with
optional named semilinear maps.  Everything downstream works with its k-basis:
each ring variable acts by a matrix and each map is a k-linear matrix together
with the name of the ring endomorphism it twists by.
"""

from __future__ import annotations

import itertools
import random
from functools import cached_property, lru_cache
from typing import NamedTuple

import sympy

from . import linalg
from .errors import DomainError, InvariantViolation, MissingMap, UnregisteredInstance, UnsupportedIdeal
from .fields import Field

# ----------------------------------------------------------------- polynomials


def _key(e: tuple):
    return (sum(e), e[::-1])


def poly_add(a: dict, b: dict, c=1) -> dict:
    out = dict(a)
    for m, v in b.items():
        w = out.get(m, 0) + c * v
        if w:
            out[m] = w
        else:
            out.pop(m, None)
    return out


def poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            w = out.get(m, 0) + ca * cb
            if w:
                out[m] = w
            else:
                out.pop(m, None)
    return out


def _divides(a: tuple, b: tuple) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _lm(p: dict) -> tuple:
    return max(p, key=_key)


def _reduce(p: dict, gb: list) -> dict:
    p = dict(p)
    rem: dict = {}
    while p:
        m = _lm(p)
        c = p[m]
        for g in gb:
            lm = _lm(g)
            if _divides(lm, m):
                shift = tuple(x - y for x, y in zip(m, lm))
                factor = {shift: c / g[lm]}
                p = poly_add(p, poly_mul(factor, g), -1)
                break
        else:
            rem[m] = c
            del p[m]
    return rem


def _spoly(f: dict, g: dict) -> dict:
    lf, lg = _lm(f), _lm(g)
    lcm = tuple(max(x, y) for x, y in zip(lf, lg))
    a = {tuple(x - y for x, y in zip(lcm, lf)): 1 / f[lf]}
    b = {tuple(x - y for x, y in zip(lcm, lg)): 1 / g[lg]}
    return poly_add(poly_mul(a, f), poly_mul(b, g), -1)


# ----------------------------------------------------------------------- rings


class QuotRing:
    """k[variables] / (gb) with gb a verified Groebner basis."""

    def __init__(self, field: Field, variables, gb, name: str, params=None, endomorphisms=None):
        self.field = field
        self.variables = tuple(variables)
        self.name = name
        self.params = dict(params or {})
        n = len(self.variables)
        self.gb = []
        for g in gb:
            g = self._coerce(g)
            if g:
                self.gb.append({m: field(c) for m, c in g.items()})
        for f, g in itertools.combinations(self.gb, 2):
            if _reduce(_spoly(f, g), self.gb):
                raise UnsupportedIdeal(f"{name}: generators are not a Groebner basis")
        lms = [_lm(g) for g in self.gb]
        bounds = []
        for i in range(n):
            pure = [m[i] for m in lms if all(m[j] == 0 for j in range(n) if j != i)]
            if not pure:
                raise UnsupportedIdeal(f"{name}: ideal is not zero-dimensional in {self.variables[i]}")
            bounds.append(min(pure))
        basis = [
            e for e in itertools.product(*(range(b) for b in bounds))
            if not any(_divides(lm, e) for lm in lms)
        ]
        self.monomials = sorted(basis, key=_key)
        self._index = {m: i for i, m in enumerate(self.monomials)}
        self.endomorphisms: dict = {}
        self.register_endomorphism("id", {v: v for v in self.variables})
        for ename, images in (endomorphisms or {}).items():
            self.register_endomorphism(ename, images)

    # -- elements are dicts {exponent tuple: coefficient} in normal form

    @property
    def dim(self) -> int:
        return len(self.monomials)

    def _coerce(self, p) -> dict:
        if isinstance(p, str):
            return self._parse_raw(p)
        if isinstance(p, dict):
            return {m: self.field(c) for m, c in p.items() if c}
        c = self.field(p)
        return {(0,) * len(self.variables): c} if c else {}

    def _parse_raw(self, text: str) -> dict:
        syms = sympy.symbols(self.variables)
        try:
            expr = sympy.sympify(text, locals=dict(zip(self.variables, syms)))
            poly = sympy.Poly(sympy.expand(expr), *syms)
        except (sympy.SympifyError, sympy.PolynomialError, TypeError) as exc:
            raise DomainError(f"cannot parse polynomial {text!r} in {self.variables}") from exc
        out = {}
        for mon, coeff in poly.terms():
            if not coeff.is_Rational:
                raise DomainError(f"non-rational coefficient in {text!r}")
            c = self.field(f"{coeff.p}/{coeff.q}")
            if c:
                out[tuple(int(e) for e in mon)] = c
        return out

    def nf(self, p) -> dict:
        return _reduce(self._coerce(p), self.gb)

    def parse(self, text: str) -> dict:
        return self.nf(text)

    def var(self, name: str) -> dict:
        i = self.variables.index(name)
        e = tuple(1 if j == i else 0 for j in range(len(self.variables)))
        return self.nf({e: 1})

    def const(self, c) -> dict:
        return self.nf(c)

    @cached_property
    def _table(self):
        return [[_reduce({tuple(x + y for x, y in zip(a, b)): self.field.one}, self.gb)
                 for b in self.monomials] for a in self.monomials]

    def mul(self, a: dict, b: dict) -> dict:
        out: dict = {}
        for ma, ca in a.items():
            ia = self._index[ma]
            for mb, cb in b.items():
                out = poly_add(out, self._table[ia][self._index[mb]], ca * cb)
        return out

    def add(self, a: dict, b: dict) -> dict:
        return poly_add(a, b)

    def sub(self, a: dict, b: dict) -> dict:
        return poly_add(a, b, -1)

    def scale(self, c, a: dict) -> dict:
        return {m: c * v for m, v in a.items() if c * v}

    def power(self, a: dict, e: int) -> dict:
        out = self.const(1)
        for _ in range(e):
            out = self.mul(out, a)
        return out

    def vec(self, a: dict) -> list:
        v = [self.field.zero] * self.dim
        for m, c in a.items():
            v[self._index[m]] = c
        return v

    def elem(self, v) -> dict:
        return {m: c for m, c in zip(self.monomials, v) if c}

    def mult_matrix(self, a: dict) -> list:
        cols = [self.vec(self.mul(a, {m: self.field.one})) for m in self.monomials]
        return linalg.transpose(cols)

    def fmt(self, a: dict) -> str:
        return format_poly(a, self.variables, self.field)

    # -- endomorphisms

    def register_endomorphism(self, name: str, images: dict) -> None:
        imgs = tuple(self.nf(images[v]) for v in self.variables)
        self.endomorphisms[name] = imgs
        for g in self.gb:
            if self._substitute(g, imgs):
                raise UnsupportedIdeal(f"{self.name}: endomorphism {name} does not preserve the ideal")

    def _substitute(self, a: dict, images: tuple) -> dict:
        out: dict = {}
        for m, c in a.items():
            term = self.const(c)
            for img, e in zip(images, m):
                if e:
                    term = self.mul(term, self.power(img, e))
            out = poly_add(out, term)
        return out

    def apply(self, name: str, a: dict) -> dict:
        try:
            images = self.endomorphisms[name]
        except KeyError:
            raise MissingMap(f"{self.name} has no endomorphism {name!r}") from None
        return self._substitute(a, images)

    def compose_endomorphisms(self, outer: str, inner: str, name: str) -> None:
        """Register ``name`` as ``outer`` after ``inner``: f -> outer(inner(f))."""
        images = {v: self.apply(outer, self.endomorphisms[inner][i]) for i, v in enumerate(self.variables)}
        self.register_endomorphism(name, images)

    def to_json(self) -> dict:
        return {"name": self.name, "field": self.field.to_json(), **self.params}

    def __repr__(self):
        return f"QuotRing({self.name}, {self.field!r}, {self.params})"


def format_poly(a: dict, variables, field: Field) -> str:
    if not a:
        return "0"
    parts = []
    for m in sorted(a, key=_key, reverse=True):
        c = a[m]
        mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in zip(variables, m) if e)
        cj = field.scalar_to_json(c)
        cs = str(cj)
        if not mono:
            parts.append(cs)
        elif cs == "1":
            parts.append(mono)
        elif cs == "-1":
            parts.append("-" + mono)
        else:
            parts.append(f"({cs})*{mono}" if "/" in cs else f"{cs}*{mono}")
    out = " + ".join(parts)
    return out.replace("+ -", "- ")


class RingMap(NamedTuple):
    """A ring homomorphism given by the images of the source variables."""

    source: QuotRing
    target: QuotRing
    images: tuple

    def __call__(self, a: dict) -> dict:
        return self.target._substitute(a, self.images)


def ring_map(source: QuotRing, target: QuotRing, images: dict) -> RingMap:
    imgs = tuple(target.nf(images[v]) for v in source.variables)
    f = RingMap(source, target, imgs)
    for g in source.gb:
        if f(g):
            raise UnsupportedIdeal(f"map {source.name} -> {target.name} does not kill the ideal")
    return f


# ------------------------------------------------------------ ring factories
# Factories are cached, so rings are shared and must not be mutated by callers.


def _fq(field: Field, q):
    q = field(q)
    if q == 0 or q == 1 or q == -1:
        raise DomainError("q must avoid 0, 1 and -1")
    return q


@lru_cache(maxsize=None)
def truncated(field: Field, N: int, var: str = "x") -> QuotRing:
    """k[var]/(var^N) with the sign endomorphism ``neg`` (var -> -var)."""
    if N < 1:
        raise DomainError("truncation order must be positive")
    e1 = (N,)
    return QuotRing(field, (var,), [{e1: 1}], "truncated", {"var": var, "N": N},
                    {"neg": {var: f"-{var}"}})


@lru_cache(maxsize=None)
def nodal(field: Field, q, N: int) -> QuotRing:
    """k[x,y]/((y - qx)(y - x/q), (x,y)^N): two lines through the origin.

    ``sigma`` swaps x and y; ``sigma1`` fixes x and reflects y across the lines.
    """
    if N < 2:
        raise DomainError("nodal truncation needs N >= 2")
    q = _fq(field, q)
    s = q + 1 / q
    curve = {(0, 2): 1, (1, 1): -s, (2, 0): 1}
    gb = [curve, {(N, 0): 1}, {(N - 1, 1): 1}]
    sq = field.scalar_to_json(q)
    return QuotRing(field, ("x", "y"), gb, "nodal", {"q": sq, "N": N},
                    {"sigma": {"x": "y", "y": "x"},
                     "sigma1": {"x": "x", "y": {(1, 0): s, (0, 1): -1}}})


@lru_cache(maxsize=None)
def cubic_node(field: Field, q, N: int = 3) -> QuotRing:
    """k[x,y]/(y^2 + xy + x^2, x^N) for q a primitive cube root of unity."""
    q = _fq(field, q)
    if q * q + q + 1 != 0:
        raise DomainError("q must be a primitive cube root of unity")
    if N % 3:
        raise DomainError("N must be a multiple of 3 so that y^N lies in the ideal")
    gb = [{(0, 2): 1, (1, 1): 1, (2, 0): 1}, {(N, 0): 1}]
    return QuotRing(field, ("x", "y"), gb, "cubic_node", {"q": field.scalar_to_json(q), "N": N},
                    {"sigma": {"x": "y", "y": "x"},
                     "sigma1": {"x": "x", "y": {(1, 0): -1, (0, 1): -1}}})


@lru_cache(maxsize=None)
def normalization(field: Field, q, N: int) -> QuotRing:
    """Two truncated lines k[t]/(t^N) x k[t]/(t^N), written k[t,e]/(e^2 - e, t^N).

    ``e`` is the idempotent of the first line.  ``sigma1`` swaps the lines;
    ``sigma`` swaps them while rescaling t by q on the first and 1/q on the second.
    """
    q = _fq(field, q)
    gb = [{(0, 2): 1, (0, 1): -1}, {(N, 0): 1}]
    scale = {(1, 1): q - 1 / q, (1, 0): 1 / q}
    R = QuotRing(field, ("t", "e"), gb, "normalization", {"q": field.scalar_to_json(q), "N": N},
                 {"sigma1": {"t": "t", "e": "1 - e"},
                  "sigma": {"t": scale, "e": "1 - e"}})
    R.compose_endomorphisms("sigma", "sigma1", "tau")
    return R


@lru_cache(maxsize=None)
def double_cover(field: Field, N: int) -> QuotRing:
    """k[x,y]/(y^2 - x, x^N); ``neg`` is the deck involution y -> -y."""
    if N < 1:
        raise DomainError("truncation order must be positive")
    gb = [{(0, 2): 1, (1, 0): -1}, {(N, 0): 1}]
    return QuotRing(field, ("x", "y"), gb, "double_cover", {"N": N},
                    {"neg": {"x": "x", "y": "-y"}})


def ring_from_json(obj: dict, field: Field | None = None) -> QuotRing:
    if "field" in obj:
        field = Field.from_json(obj["field"])
    if field is None:
        field = Field()
    name = obj.get("name")
    if name == "truncated":
        return truncated(field, int(obj["N"]), obj.get("var", "x"))
    if name == "nodal":
        return nodal(field, obj["q"], int(obj["N"]))
    if name == "cubic_node":
        return cubic_node(field, obj["q"], int(obj.get("N", 3)))
    if name == "normalization":
        return normalization(field, obj["q"], int(obj["N"]))
    if name == "double_cover":
        return double_cover(field, int(obj["N"]))
    raise UnregisteredInstance(f"unknown ring {name!r}")


# ------------------------------------------------------------------- modules


class SemilinearMap(NamedTuple):
    matrix: list  # k-linear matrix on the module's k-basis
    twist: str  # endomorphism name: m(f v) = twist(f) m(v)


class ModulePresentation:
    """Cokernel of relations on R^gens, with optional named semilinear maps.

    ``rels`` is a list of relation vectors (one ring element per generator).
    ``maps`` sends a name to ``(images, twist)`` where ``images[i]`` is the
    image of generator i as a vector of ring elements.
    """

    def __init__(self, ring: QuotRing, gens, rels=(), maps=None, _images=None):
        self.ring = ring
        self.field = ring.field
        self.gens = tuple(gens)
        g = len(self.gens)
        self.rels = [[ring.nf(c) for c in r] for r in rels]
        for r in self.rels:
            if len(r) != g:
                raise DomainError("relation length differs from the number of generators")
        self._powers = None
        if _images is None:
            self._build_basis()
        else:
            self._use_images(*_images)
        if self._powers is not None:
            self.actions = {v: self._powers[tuple(int(u == v) for u in ring.variables)] for v in ring.variables}
        else:
            self.actions = {v: self._action(ring.var(v)) for v in ring.variables}
        self.map_data = {}
        self.maps = {}
        for name, (images, twist) in (maps or {}).items():
            self.add_map(name, images, twist)

    # -- free module F = R^g with k-basis (gen, monomial)

    def _fvec(self, elems) -> list:
        v = []
        for a in elems:
            v.extend(self.ring.vec(a))
        return v

    def _build_basis(self):
        self._images = None
        R = self.ring
        g, d = len(self.gens), R.dim
        n = g * d
        # higher monomials first so that the quotient basis prefers low degree
        order = sorted(range(n), key=lambda c: (-(c % d), c // d))
        self._order = order
        pos = {c: i for i, c in enumerate(order)}
        rows = []
        for r in self.rels:
            for m in R.monomials:
                mono = {m: self.field.one}
                fv = self._fvec([R.mul(mono, c) for c in r])
                if any(fv):
                    rows.append([fv[c] for c in order])
        red, pivots = linalg.rref(rows, n, self.field) if rows else ([], [])
        self._red, self._pivots = red, pivots
        pivset = set(pivots)
        free = [order[i] for i in range(n) if i not in pivset]
        free.sort(key=lambda c: (c // d, c % d))
        self._free = free
        self._pos = pos
        self.dim = len(free)
        self.basis_labels = [(self.gens[c // d], R.monomials[c % d]) for c in free]

    def _use_images(self, images: list, powers: dict):
        """Matrix modules: ``images[c]`` holds the coordinates of free basis vector c.

        ``powers`` maps each exponent vector to the matrix of that monomial.
        """
        R = self.ring
        self._powers = powers
        one = R.monomials.index((0,) * len(R.variables))
        self._images = images
        self._free = [i * R.dim + one for i in range(len(self.gens))]
        self.dim = len(self.gens)
        self.basis_labels = [(gen, R.monomials[one]) for gen in self.gens]

    def reduce_free(self, fv: list) -> list:
        """Coordinates in the k-basis of an element of R^g given by a free vector."""
        if self._images is not None:
            out = [self.field.zero] * self.dim
            for c, x in enumerate(fv):
                if x:
                    out = [a + x * b for a, b in zip(out, self._images[c])]
            return out
        v = [fv[c] for c in self._order]
        for row, pc in zip(self._red, self._pivots):
            c = v[pc]
            if c:
                v = [a - c * b for a, b in zip(v, row)]
        return [v[self._pos[c]] for c in self._free]

    def element(self, elems) -> list:
        """Coordinates of sum_i elems[i] * gen_i."""
        return self.reduce_free(self._fvec([self.ring.nf(a) for a in elems]))

    def lift(self, coords) -> list:
        """A vector of ring elements (one per generator) representing coords."""
        R = self.ring
        out = [{} for _ in self.gens]
        d = R.dim
        for c, x in zip(self._free, coords):
            if x:
                i, m = c // d, R.monomials[c % d]
                out[i] = poly_add(out[i], {m: x})
        return out

    def _action(self, a: dict) -> list:
        R = self.ring
        if self._powers is not None:
            out = linalg.zeros(self.dim, self.dim, self.field)
            for m, c in a.items():
                out = linalg.add(out, linalg.scale(c, self._powers[m]))
            return out
        cols = []
        for c in self._free:
            i, m = c // R.dim, R.monomials[c % R.dim]
            elems = [{} for _ in self.gens]
            elems[i] = R.mul(a, {m: self.field.one})
            cols.append(self.reduce_free(self._fvec(elems)))
        return linalg.transpose(cols) if cols else []

    def ring_action(self, a) -> list:
        """Matrix of multiplication by a ring element."""
        if not self.dim:
            return []
        return self._action(self.ring.nf(a))

    def add_map(self, name: str, images, twist: str) -> None:
        R = self.ring
        if twist not in R.endomorphisms:
            raise MissingMap(f"{R.name} has no endomorphism {twist!r}")
        imgs = [[R.nf(c) for c in row] for row in images]
        if len(imgs) != len(self.gens) or any(len(r) != len(self.gens) for r in imgs):
            raise DomainError(f"map {name}: need one image vector per generator")

        def apply(elems):
            out = [{} for _ in self.gens]
            for i, a in enumerate(elems):
                if a:
                    ta = R.apply(twist, a)
                    for j, c in enumerate(imgs[i]):
                        out[j] = poly_add(out[j], R.mul(ta, c))
            return out

        for r in self.rels:
            for m in R.monomials:
                mono = {m: self.field.one}
                if any(self.element(apply([R.mul(mono, c) for c in r]))):
                    raise DomainError(f"map {name} does not respect the relations")
        cols = []
        for c in self._free:
            i, m = c // R.dim, R.monomials[c % R.dim]
            elems = [{} for _ in self.gens]
            elems[i] = {m: self.field.one}
            cols.append(self.element(apply(elems)))
        matrix = linalg.transpose(cols) if cols else []
        self.map_data[name] = (imgs, twist)
        self.maps[name] = SemilinearMap(matrix, twist)
        self.__dict__.pop("_profile_cache", None)

    def check_semilinear(self, name: str) -> bool:
        S = self.maps[name]
        for v in self.ring.variables:
            lhs = linalg.matmul(S.matrix, self.actions[v], self.field)
            rhs = linalg.matmul(self.ring_action(self.ring.apply(S.twist, self.ring.var(v))), S.matrix, self.field)
            if lhs != rhs:
                return False
        return True

    # -- constructors

    @classmethod
    def from_matrices(cls, ring: QuotRing, actions: dict, maps=None) -> "ModulePresentation":
        """Module with k-basis e_0..e_{d-1} on which each variable acts by a matrix.

        ``maps`` sends a name to ``(matrix, twist)`` with a k-linear matrix.
        """
        f = ring.field
        d = len(next(iter(actions.values()))) if actions else 0
        gens = [f"e{i}" for i in range(d)]
        mats = [[[f(c) for c in row] for row in actions[v]] for v in ring.variables]
        for A, B in itertools.combinations(mats, 2):
            if linalg.matmul(A, B, f) != linalg.matmul(B, A, f):
                raise DomainError("action matrices do not define a module over the ring")

        powers = {tuple(0 for _ in mats): linalg.identity(d, f)}

        def monomial(e):
            # X^e = X^(e - e_v) X_v, memoized so each power costs one product
            if e not in powers:
                v = next(i for i, k in enumerate(e) if k)
                prev = monomial(tuple(k - (i == v) for i, k in enumerate(e)))
                powers[e] = linalg.matmul(prev, mats[v], f)
            return powers[e]

        for m in ring.monomials:
            monomial(m)
        for g in ring.gb:
            total = linalg.zeros(d, d, f)
            for e, c in g.items():
                total = linalg.add(total, linalg.scale(f(c), monomial(e)))
            if not linalg.is_zero(total):
                raise DomainError("action matrices do not define a module over the ring")
        images = [[powers[m][row][i] for row in range(d)] for i in range(d) for m in ring.monomials]
        rels = []
        for v, X in zip(ring.variables, mats):
            xv = ring.var(v)
            for j in range(d):
                r = [ring.const(-X[i][j]) for i in range(d)]
                r[j] = poly_add(r[j], xv)
                rels.append(r)
        M = cls(ring, gens, rels, _images=(images, powers))
        for name, (matrix, twist) in (maps or {}).items():
            M._add_matrix_map(name, [[f(c) for c in row] for row in matrix], twist)
        return M

    def _add_matrix_map(self, name: str, matrix: list, twist: str) -> None:
        """Attach a k-linear map on a matrix module after checking semilinearity directly."""
        R, d = self.ring, self.dim
        if twist not in R.endomorphisms:
            raise MissingMap(f"{R.name} has no endomorphism {twist!r}")
        if len(matrix) != d or any(len(row) != d for row in matrix):
            raise DomainError(f"map {name}: matrix must be {d} x {d}")
        self.maps[name] = SemilinearMap(matrix, twist)
        self.__dict__.pop("_profile_cache", None)
        if not self.check_semilinear(name):
            del self.maps[name]
            raise DomainError(f"map {name} does not respect the relations")
        self.map_data[name] = ([[R.const(matrix[i][j]) for i in range(d)] for j in range(d)], twist)

    @classmethod
    def free(cls, ring: QuotRing, rank: int = 1, maps=None) -> "ModulePresentation":
        return cls(ring, [f"s{i}" if rank > 1 else "s" for i in range(rank)], [], maps)

    def with_maps(self, maps: dict) -> "ModulePresentation":
        """Same module with extra maps given as ``(images, twist)``."""
        all_maps = dict(self.map_data)
        all_maps.update(maps)
        return ModulePresentation(self.ring, self.gens, self.rels, all_maps)

    def matrix_maps(self) -> dict:
        return {name: (m.matrix, m.twist) for name, m in self.maps.items()}

    def to_json(self) -> dict:
        R = self.ring
        return {
            "ring": R.to_json(),
            "gens": list(self.gens),
            "rels": [[R.fmt(c) for c in r] for r in self.rels],
            "maps": {
                name: {"matrix": [[R.fmt(c) for c in row] for row in imgs], "twist": tw}
                for name, (imgs, tw) in sorted(self.map_data.items())
            },
        }

    @classmethod
    def from_json(cls, obj: dict, field: Field | None = None) -> "ModulePresentation":
        R = ring_from_json(obj["ring"], field)
        maps = {name: (m["matrix"], m.get("twist", "id")) for name, m in obj.get("maps", {}).items()}
        return cls(R, obj["gens"], obj.get("rels", []), maps)

    def __repr__(self):
        return f"ModulePresentation({self.ring.name}, dim={self.dim}, maps={sorted(self.maps)})"


def pullback(M: ModulePresentation, f: RingMap, twists: dict | None = None) -> ModulePresentation:
    """Extension of scalars along ``f``; ``twists`` renames map twists on the target."""
    twists = twists or {}
    rels = [[f(c) for c in r] for r in M.rels]
    maps = {}
    for name, (imgs, tw) in M.map_data.items():
        if name in twists or tw == "id":
            maps[name] = ([[f(c) for c in row] for row in imgs], twists.get(name, "id"))
    return ModulePresentation(f.target, M.gens, rels, maps)


def pullback_hom(phi: list, M: ModulePresentation, N: ModulePresentation, f: RingMap,
                 PM: ModulePresentation, PN: ModulePresentation) -> list:
    """Matrix of the map induced on pullbacks by a module map M -> N."""
    cols = []
    for c in PM._free:
        i, m = c // PM.ring.dim, PM.ring.monomials[c % PM.ring.dim]
        img = linalg.matvec(phi, M.element([({} if j != i else M.ring.const(1)) for j in range(len(M.gens))]), M.field)
        lifted = [f(a) for a in N.lift(img)]
        mono = {m: PM.field.one}
        cols.append(PN.element([PN.ring.mul(mono, a) for a in lifted]))
    return linalg.transpose(cols) if cols else []


# ------------------------------------------------------------- Hom and iso


class HomSpace(NamedTuple):
    basis: list
    dim_source: int
    dim_target: int

    @property
    def dimension(self) -> int:
        return len(self.basis)


def _commutation_rows(A: list, B: list, dm: int, dn: int, field: Field) -> list:
    """Rows of the linear system phi A - B phi = 0 for phi of shape dn x dm."""
    zero = field.zero
    rows = []
    for i in range(dn):
        for j in range(dm):
            row = [zero] * (dn * dm)
            for k in range(dm):
                if A[k][j]:
                    row[i * dm + k] = row[i * dm + k] + A[k][j]
            for k in range(dn):
                if B[i][k]:
                    row[k * dm + j] = row[k * dm + j] - B[i][k]
            if any(row):
                rows.append(row)
    return rows


def _pairs_for(M: ModulePresentation, N: ModulePresentation, constraints) -> list:
    if M.ring is not N.ring and (M.ring.name, M.ring.params, M.field) != (N.ring.name, N.ring.params, N.field):
        raise DomainError("modules live over different rings")
    pairs = [(M.actions[v], N.actions[v]) for v in M.ring.variables]
    for c in constraints:
        if c not in M.maps or c not in N.maps:
            raise MissingMap(f"constraint {c!r} is missing on one side")
        if M.maps[c].twist != N.maps[c].twist:
            raise DomainError(f"constraint {c!r} twists differently on the two sides")
        pairs.append((M.maps[c].matrix, N.maps[c].matrix))
    return pairs


def hom_space(M: ModulePresentation, N: ModulePresentation, constraints=()) -> HomSpace:
    """Ring-linear maps M -> N commuting with the named maps."""
    dm, dn = M.dim, N.dim
    field = M.field
    if not dm or not dn:
        return HomSpace([], dm, dn)
    rows = []
    for A, B in _pairs_for(M, N, constraints):
        rows.extend(_commutation_rows(A, B, dm, dn, field))
    sols = linalg.nullspace(rows, dn * dm, field) if rows else [
        [field.one if k == u else field.zero for k in range(dn * dm)] for u in range(dn * dm)
    ]
    basis = [[v[i * dm:(i + 1) * dm] for i in range(dn)] for v in sols]
    return HomSpace(basis, dm, dn)


def satisfies(phi: list, M: ModulePresentation, N: ModulePresentation, constraints=()) -> bool:
    field = M.field
    for A, B in _pairs_for(M, N, constraints):
        if linalg.matmul(phi, A, field) != linalg.matmul(B, phi, field):
            return False
    return True


def rank_profile(M: ModulePresentation, constraints=()) -> tuple:
    """Ranks of powers of every variable action and named map: an iso invariant."""
    key = tuple(constraints)
    cache = M.__dict__.setdefault("_profile_cache", {})
    if key in cache:
        return cache[key]
    out = []
    mats = [M.actions[v] for v in M.ring.variables] + [M.maps[c].matrix for c in constraints]
    for X in mats:
        P = linalg.identity(M.dim, M.field)
        ranks = []
        for _ in range(M.dim):
            if len(ranks) > 1 and ranks[-1] == ranks[-2]:
                # rank(X^k) = rank(X^(k+1)) forces every later rank to agree
                ranks.append(ranks[-1])
                continue
            P = linalg.matmul(P, X, M.field)
            ranks.append(linalg.rank(P, M.dim, M.field))
        out.append(tuple(ranks))
    cache[key] = tuple(out)
    return cache[key]


class IsoResult(NamedTuple):
    verdict: bool
    witness: list | None
    certificate: dict

    def __bool__(self):
        return self.verdict


def _combine(basis: list, coeffs: list, field: Field) -> list:
    n, m = len(basis[0]), len(basis[0][0])
    out = linalg.zeros(n, m, field)
    for c, B in zip(coeffs, basis):
        if c:
            out = linalg.add(out, linalg.scale(c, B))
    return out


def iso_test(M: ModulePresentation, N: ModulePresentation, constraints=(), seed: int = 0,
             tries: int = 24) -> IsoResult:
    """Decide exactly whether some invertible map M -> N satisfies the constraints."""
    field = M.field
    constraints = tuple(constraints)
    if M.dim != N.dim:
        return IsoResult(False, None, {"method": "dimension", "dims": [M.dim, N.dim]})
    if not M.dim:
        return IsoResult(True, [], {"method": "zero-module"})
    pm, pn = rank_profile(M, constraints), rank_profile(N, constraints)
    if pm != pn:
        return IsoResult(False, None, {"method": "rank-profile",
                                       "source": [list(r) for r in pm], "target": [list(r) for r in pn]})
    H = hom_space(M, N, constraints)
    if not H.basis:
        return IsoResult(False, None, {"method": "hom-space-zero"})
    rng = random.Random(seed)
    d = len(H.basis)

    def attempt(coeffs):
        phi = _combine(H.basis, coeffs, field)
        if linalg.det(phi, field):
            if not satisfies(phi, M, N, constraints):
                raise InvariantViolation("hom-space element fails its constraints")
            return phi
        return None

    for _ in range(tries):
        coeffs = [field.random(rng, 50) for _ in range(d)]
        phi = attempt(coeffs)
        if phi is not None:
            return IsoResult(True, phi, {"method": "random-point",
                                         "point": [field.scalar_to_json(c) for c in coeffs]})
    if field.p and field.p ** d <= 200_000:
        for coeffs in itertools.product(field.elements(), repeat=d):
            phi = attempt(list(coeffs))
            if phi is not None:
                return IsoResult(True, phi, {"method": "exhaustive",
                                             "point": [field.scalar_to_json(c) for c in coeffs]})
        return IsoResult(False, None, {"method": "exhaustive", "points": field.p ** d})
    return _symbolic_iso(M, N, H, constraints, attempt)


def _symbolic_iso(M, N, H, constraints, attempt) -> IsoResult:
    field = M.field
    d = len(H.basis)
    cs = sympy.symbols(f"c0:{d}")

    def lift(x):
        return int(x) if field.p else sympy.Rational(x.numerator, x.denominator)

    n = M.dim
    mat = sympy.zeros(n, n)
    for c, B in zip(cs, H.basis):
        mat += c * sympy.Matrix(n, n, lambda i, j: lift(B[i][j]))
    poly = sympy.Poly(mat.det(method="berkowitz"), *cs)
    if field.p:
        poly = sympy.Poly(poly.as_expr(), *cs, modulus=field.p)
    if poly.is_zero:
        return IsoResult(False, None, {"method": "determinant-identically-zero"})
    # a nonzero polynomial of degree <= n in each variable survives on {0..n}^d
    grid = range(n + 1) if not field.p or field.p > n else range(field.p)
    for pt in itertools.product(grid, repeat=d):
        if poly(*pt):
            phi = attempt([field(v) for v in pt])
            if phi is None:
                raise InvariantViolation("determinant evaluation disagrees with elimination")
            return IsoResult(True, phi, {"method": "grid-point", "point": [field.scalar_to_json(v) for v in pt]})
    return IsoResult(False, None, {"method": "determinant-vanishes-on-field"})


def direct_sum(M: ModulePresentation, N: ModulePresentation) -> ModulePresentation:
    R = M.ring
    g, h = len(M.gens), len(N.gens)
    rels = [list(r) + [{}] * h for r in M.rels] + [[{}] * g + list(r) for r in N.rels]
    maps = {}
    for name in set(M.map_data) & set(N.map_data):
        (im, tw), (jn, tw2) = M.map_data[name], N.map_data[name]
        if tw != tw2:
            continue
        rows = [list(r) + [{}] * h for r in im] + [[{}] * g + list(r) for r in jn]
        maps[name] = (rows, tw)
    gens = [f"a.{x}" for x in M.gens] + [f"b.{x}" for x in N.gens]
    return ModulePresentation(R, gens, rels, maps)
