"""Gluing a module from its restriction to a formal disk and to the complement of an orbit.

Two kinds of objects are glued:

* torsion modules supported on one orbit ``G p``, stored on a finite window of
  coset representatives with a stalk, a local parameter action and transport
  maps from the stalk at ``p`` (``OrbitTorsionModule``);
* rank-1 modules with a chosen lattice at every orbit (``RankOneSheaf``).

``phi`` splits an object into a ``GluingTriple`` (local data, global data away
from the orbit, identification on the punctured disk) and ``psi`` rebuilds it.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field as dc_field

from . import linalg
from .dihedral import GroupElement, R, SIGMA1, StabilizerKind, T, is_representative, stabilizer
from .divisor import CanonicalForm
from .errors import DomainError, IncompatibleIso, InvariantViolation, NonTorsionInput, NotRepresentative
from .fields import Field
from .localtype import (
    GENERIC,
    LocalType,
    RankOneModule,
    SubmoduleProfile,
    TorsionLocalModule,
    baseline,
    local_type_rank1,
    submodule_from_profile,
)
from .quotring import hom_space, iso_test
from .symbolic import SymbolicCurve, SymbolicPoint

IDENTITY = T(0)


# ------------------------------------------------------------ coset bookkeeping


def _check_point(p: SymbolicPoint) -> None:
    if not is_representative(p):
        raise NotRepresentative(f"{p!r} is not an orbit representative")


def coset_reps(p: SymbolicPoint, window: int) -> list:
    """Representatives of G / St_p with translation part in [-window, window]."""
    reps = [T(n) for n in range(-window, window + 1)]
    if stabilizer(p).kind is StabilizerKind.TRIVIAL:
        reps += [R(n) for n in range(-window, window + 1)]
    return reps


def reduce_to_rep(g: GroupElement, p: SymbolicPoint) -> tuple[GroupElement, bool]:
    """Write g = rep * h with h in St_p; returns (rep, h is the nontrivial element)."""
    st = stabilizer(p)
    if st.kind is StabilizerKind.TRIVIAL or not g.reflection:
        return g, False
    s = st.element
    return T(g.n - s.n), True


def _kind_for(p: SymbolicPoint) -> StabilizerKind:
    return stabilizer(p).kind


# ------------------------------------------------------------ torsion objects


class OrbitTorsionModule:
    """A G-equivariant torsion module supported on the orbit of p, on a window.

    ``stalks[r]`` is the local parameter action at r.p (parameter r_* rho);
    ``transport[r]`` maps the stalk at p to the stalk at r.p.  ``involution``
    is the action of the nontrivial stabilizer element on the stalk at p.
    """

    def __init__(self, p: SymbolicPoint, field: Field, window: int, stalks: dict, transport: dict,
                 involution: list | None, N: int):
        _check_point(p)
        self.p, self.field, self.window, self.N = p, field, window, N
        self.reps = coset_reps(p, window)
        if set(stalks) != set(self.reps) or set(transport) != set(self.reps):
            raise DomainError("stalks and transports must be given on every coset representative")
        self.stalks, self.transport, self.involution = stalks, transport, involution
        kind = _kind_for(p)
        if (kind is StabilizerKind.TRIVIAL) != (involution is None):
            raise DomainError("an involution is required exactly when the stabilizer is nontrivial")
        self.stalk_dim = len(stalks[IDENTITY])
        self._inverse = {r: linalg.inverse(transport[r], field) for r in self.reps}
        if any(v is None for v in self._inverse.values()):
            raise DomainError("transport maps must be invertible")

    @property
    def dim(self) -> int:
        return self.stalk_dim * len(self.reps)

    def stalk(self) -> TorsionLocalModule:
        return TorsionLocalModule(self.field, self.stalks[IDENTITY], self.involution, self.N, _kind_for(self.p))

    def action(self, g0: GroupElement, r: GroupElement):
        """(target rep, matrix, semilinear) for g0 acting from the stalk at r.p, or None off the window."""
        target, flip = reduce_to_rep(g0 * r, self.p)
        if target not in self.transport:
            return None
        f = self.field
        mid = self.involution if flip else linalg.identity(self.stalk_dim, f)
        A = linalg.matmul(self.transport[target], linalg.matmul(mid, self._inverse[r], f), f)
        return target, A, flip

    def check(self) -> None:
        """Every action map intertwines the local parameters (up to sign when semilinear)."""
        f = self.field
        for g0 in (T(1), SIGMA1):
            for r in self.reps:
                res = self.action(g0, r)
                if res is None:
                    continue
                target, A, flip = res
                lhs = linalg.matmul(A, self.stalks[r], f)
                rhs = linalg.matmul(self.stalks[target], A, f)
                if flip:
                    rhs = linalg.scale(f(-1), rhs)
                if lhs != rhs:
                    raise InvariantViolation(f"action of {g0!r} at {r!r} does not intertwine the stalks")

    def to_json(self) -> dict:
        f = self.field

        def mat(A):
            return [[f.scalar_to_json(c) for c in row] for row in A]

        return {
            "point": {"base": self.p.base.id, "class": self.p.base.cls.value},
            "window": self.window,
            "stalk": self.stalk().to_json(),
            "transport": {repr(r): mat(self.transport[r]) for r in self.reps},
        }


def iota_star(Tm: TorsionLocalModule, p: SymbolicPoint, window: int = 3) -> OrbitTorsionModule:
    """The induced module: one copy of T per coset, identity transports."""
    _check_point(p)
    if not isinstance(Tm, TorsionLocalModule):
        raise NonTorsionInput("iota_star takes torsion local data; rank-1 data goes through psi")
    kind = _kind_for(p)
    involution = Tm.involution
    if kind is StabilizerKind.TRIVIAL:
        involution = None
    elif involution is None:
        raise DomainError("a nontrivial stabilizer needs an involution on the stalk")
    f = Tm.field
    I = linalg.identity(Tm.dim, f)
    reps = coset_reps(p, window)
    return OrbitTorsionModule(p, f, window, {r: Tm.rho for r in reps}, {r: I for r in reps}, involution, Tm.N)


def gauged(Tm: TorsionLocalModule, p: SymbolicPoint, window: int, rng: random.Random) -> OrbitTorsionModule:
    """An orbit module isomorphic to iota_star(T) but with random bases at every point."""
    f = Tm.field
    d = Tm.dim
    reps = coset_reps(p, window)
    P = {r: random_invertible(f, d, rng) for r in reps}
    Pe_inv = linalg.inverse(P[IDENTITY], f)
    stalks = {r: linalg.matmul(P[r], linalg.matmul(Tm.rho, linalg.inverse(P[r], f), f), f) for r in reps}
    transport = {r: linalg.matmul(P[r], Pe_inv, f) for r in reps}
    inv = None
    if _kind_for(p) is not StabilizerKind.TRIVIAL:
        inv = linalg.matmul(P[IDENTITY], linalg.matmul(Tm.involution, Pe_inv, f), f)
    return OrbitTorsionModule(p, f, window, stalks, transport, inv, Tm.N)


def random_invertible(field: Field, d: int, rng: random.Random) -> list:
    while True:
        A = [[field.random(rng, 5) for _ in range(d)] for _ in range(d)]
        if not d or linalg.inverse(A, field) is not None:
            return A


# ------------------------------------------------------------ rank-1 objects


@dataclass(frozen=True)
class RankOneSheaf:
    """A rank-1 module together with a validated lattice profile."""

    module: RankOneModule
    profile: SubmoduleProfile

    def __post_init__(self):
        submodule_from_profile(self.module, self.profile)
        # entries at the baseline carry no information; drop them so equality is literal
        vals = {b: v for b, v in self.profile.vals.items() if v != baseline(self.module, b)}
        object.__setattr__(self, "profile", SubmoduleProfile(vals))


@dataclass(frozen=True)
class RankOneLocal:
    """Local rank-1 data in a local frame: the stalk valuation and the lattice type."""

    stalk: object  # int or GENERIC
    lattices: LocalType

    def shifted(self, c: int) -> "RankOneLocal":
        s = self.stalk if self.stalk == GENERIC else self.stalk + c
        return RankOneLocal(s, self.lattices.shifted(c))


@dataclass(frozen=True)
class GlobalRankOne:
    canonical: CanonicalForm
    profile: dict = dc_field(default_factory=dict)  # valuations away from the glued orbit


@dataclass(frozen=True)
class GluingTriple:
    point: SymbolicPoint
    local: object  # TorsionLocalModule or RankOneLocal
    global_part: GlobalRankOne | None
    offset: int | None  # identification on the punctured disk; vacuous for torsion

    @property
    def is_torsion(self) -> bool:
        return isinstance(self.local, TorsionLocalModule)

    def normalized(self) -> "GluingTriple":
        """The same triple with the local frame moved so that the identification is trivial."""
        if self.is_torsion or not self.offset:
            return self
        return GluingTriple(self.point, self.local.shifted(self.offset), self.global_part, 0)

    def to_json(self) -> dict:
        out = {"point": {"base": self.point.base.id, "class": self.point.base.cls.value}}
        if self.is_torsion:
            out.update({"local": self.local.to_json(), "global": None, "iso": None})
        else:
            out["local"] = {"stalk": self.local.stalk, "lattices": self.local.lattices.to_json()}
            out["global"] = {
                "canonical": [{"base": b.id, "n": k} for b, k in self.global_part.canonical.items()],
                "profile": [{"base": b.id, "v": v} for b, v in sorted(self.global_part.profile.items())],
            }
            out["iso"] = {"offset": self.offset}
        return out


def phi(M, p: SymbolicPoint, window: int | None = None) -> GluingTriple:
    """Split a module into local data at p, data away from the orbit, and the identification."""
    _check_point(p)
    if isinstance(M, OrbitTorsionModule):
        if M.p != p:
            return GluingTriple(p, TorsionLocalModule.from_partition(M.field, [], [] if M.involution else None,
                                                                     _kind_for(p)), None, None)
        return GluingTriple(p, M.stalk(), None, None)
    if isinstance(M, RankOneSheaf):
        mod = M.module
        mod.curve.check(p.base)
        lt = local_type_rank1(mod, p)
        v = M.profile.value(p.base, lt.baseline)
        rest = {b: val for b, val in M.profile.vals.items() if b != p.base}
        return GluingTriple(p, RankOneLocal(v, lt), GlobalRankOne(mod.canonical, rest), 0)
    raise DomainError(f"cannot restrict {type(M).__name__}")


def psi(t: GluingTriple, curve: SymbolicCurve | None = None, window: int = 3):
    """Rebuild a module from a triple: the induced module for torsion, lattice surgery for rank 1."""
    _check_point(t.point)
    if t.is_torsion:
        return iota_star(t.local, t.point, window)
    if curve is None:
        raise DomainError("rank-1 gluing needs the symbolic curve")
    mod = RankOneModule(t.global_part.canonical, curve)
    expected = local_type_rank1(mod, t.point)
    c = t.offset or 0
    if t.local.lattices.shifted(c) != expected:
        raise IncompatibleIso(f"local lattices {t.local.lattices.to_json()} shifted by {c} "
                              f"do not match {expected.to_json()}")
    vals = dict(t.global_part.profile)
    vals[t.point.base] = t.local.shifted(c).stalk
    return RankOneSheaf(mod, SubmoduleProfile(vals))


# ------------------------------------------------------------ round trips


def torsion_roundtrip_iso(M: OrbitTorsionModule) -> dict:
    """Build the isomorphism M -> psi(phi(M)) blockwise and check it, plus phi(psi(t)) = t."""
    f = M.field
    t = phi(M, M.p)
    back = psi(t, window=M.window)
    eps = {r: M._inverse[r] for r in M.reps}
    ok_rho = all(linalg.matmul(eps[r], M.stalks[r], f) == linalg.matmul(back.stalks[r], eps[r], f) for r in M.reps)
    ok_act = True
    for g0 in (T(1), T(-1), SIGMA1, R(1)):
        for r in M.reps:
            a, b = M.action(g0, r), back.action(g0, r)
            if (a is None) != (b is None):
                ok_act = False
                continue
            if a is None:
                continue
            target = a[0]
            if linalg.matmul(eps[target], a[1], f) != linalg.matmul(b[1], eps[r], f):
                ok_act = False
    constraints = ["h"] if t.local.involution is not None else []
    stalk_iso = iso_test(M.stalk().presentation(), back.stalk().presentation(), constraints).verdict
    again = phi(back, M.p)
    literal = again.local.rho == t.local.rho and again.local.involution == t.local.involution
    return {"psi_phi_iso": ok_rho and ok_act and stalk_iso, "phi_psi_identity": literal}


def rank_one_roundtrip(M: RankOneSheaf, p: SymbolicPoint, offset: int = 0) -> dict:
    """psi(phi(M)) = M literally, and phi(psi(t)) = t for t reframed by ``offset``."""
    t = phi(M, p)
    same = psi(t, M.module.curve) == M
    reframed = GluingTriple(p, t.local.shifted(-offset), t.global_part, offset)
    back = phi(psi(reframed, M.module.curve), p)
    return {"psi_phi_identity": same, "phi_psi_identity": back == reframed.normalized()}


def additive_check(T1: TorsionLocalModule, T2: TorsionLocalModule, p: SymbolicPoint, window: int = 2) -> bool:
    """psi of a direct sum is the direct sum of the psi's, stalk by stalk."""
    S = direct_sum_torsion(T1, T2)
    glued = psi(GluingTriple(p, S, None, None), window=window)
    a, b = iota_star(T1, p, window), iota_star(T2, p, window)
    f = S.field
    for r in glued.reps:
        block = _block_diag(a.stalks[r], b.stalks[r], f)
        if glued.stalks[r] != block:
            return False
    return glued.dim == a.dim + b.dim


def _block_diag(A: list, B: list, f: Field) -> list:
    m, n = len(A), len(B)
    out = linalg.zeros(m + n, m + n, f)
    for i in range(m):
        out[i][:m] = A[i]
    for i in range(n):
        out[m + i][m:] = B[i]
    return out


def direct_sum_torsion(T1: TorsionLocalModule, T2: TorsionLocalModule) -> TorsionLocalModule:
    f = T1.field
    rho = _block_diag(T1.rho, T2.rho, f)
    inv = None
    if T1.involution is not None and T2.involution is not None:
        inv = _block_diag(T1.involution, T2.involution, f)
    return TorsionLocalModule(f, rho, inv, max(T1.N, T2.N), T1.kind)


# ------------------------------------------------------------ adjunction


def equivariant_homs(A: OrbitTorsionModule, B: OrbitTorsionModule) -> list:
    """Basis of G-equivariant module maps A -> B on the window, as dicts rep -> block.

    Maps are stalkwise because functions separate the points of an orbit.
    """
    if A.p != B.p or A.window != B.window:
        raise DomainError("both modules must live on the same orbit window")
    f = A.field
    da, db = A.stalk_dim, B.stalk_dim
    reps = A.reps
    size = da * db
    idx = {r: i * size for i, r in enumerate(reps)}
    n = size * len(reps)
    rows = []

    for r in reps:
        # X_r rho^A_r = rho^B_r X_r
        Ar, Br = A.stalks[r], B.stalks[r]
        for i in range(db):
            for j in range(da):
                row = [f.zero] * n
                for k in range(da):
                    if Ar[k][j]:
                        row[idx[r] + i * da + k] += Ar[k][j]
                for k in range(db):
                    if Br[i][k]:
                        row[idx[r] + k * da + j] -= Br[i][k]
                if any(row):
                    rows.append(row)
    for g0 in (T(1), SIGMA1):
        for r in reps:
            a, b = A.action(g0, r), B.action(g0, r)
            if a is None or b is None:
                continue
            target, MA, _ = a
            _, MB, _ = b
            # X_target MA = MB X_r
            for i in range(db):
                for j in range(da):
                    row = [f.zero] * n
                    for k in range(da):
                        if MA[k][j]:
                            row[idx[target] + i * da + k] += MA[k][j]
                    for k in range(db):
                        if MB[i][k]:
                            row[idx[r] + k * da + j] -= MB[i][k]
                    if any(row):
                        rows.append(row)
    sols = linalg.kernel_basis(rows, n, f) if n else []
    out = []
    for v in sols:
        out.append({r: [v[idx[r] + i * da: idx[r] + (i + 1) * da] for i in range(db)] for r in reps})
    return out


def adjunction_check(T1: TorsionLocalModule, T2: TorsionLocalModule, p: SymbolicPoint, window: int = 2,
                     seed: int = 0) -> dict:
    """Hom_G(iota_* T1, iota_* T2) on a window against Hom_{St}(T1, T2), with explicit inverse maps."""
    rng = random.Random(seed)
    f = T1.field
    A = gauged(T1, p, window, rng)
    B = gauged(T2, p, window, rng)
    glob = equivariant_homs(A, B)
    constraints = ["h"] if T1.involution is not None else []
    loc = hom_space(A.stalk().presentation(), B.stalk().presentation(), constraints).basis
    # restriction: X -> X_e; extension: Y -> (transport_B[r] Y transport_A[r]^-1)_r
    restricted = [X[IDENTITY] for X in glob]
    extended = [{r: linalg.matmul(B.transport[r], linalg.matmul(Y, A._inverse[r], f), f) for r in A.reps} for Y in loc]

    def flat(mats):
        return [[c for row in M for c in row] for M in mats]

    ncols = A.stalk_dim * B.stalk_dim
    rank_restricted = linalg.rank(flat(restricted), ncols, f) if restricted else 0
    glob_rows = [[c for r in A.reps for row in X[r] for c in row] for X in glob]
    ext_rows = [[c for r in A.reps for row in X[r] for c in row] for X in extended]
    ncols_g = ncols * len(A.reps)
    ext_in_glob = True
    if ext_rows:
        base = linalg.rank(glob_rows, ncols_g, f) if glob_rows else 0
        ext_in_glob = linalg.rank(glob_rows + ext_rows, ncols_g, f) == base
    loc_span = linalg.rank(flat(loc), ncols, f) if loc else 0
    restricted_in_loc = (linalg.rank(flat(loc) + flat(restricted), ncols, f) if loc or restricted else 0) == loc_span
    roundtrip = all(X[IDENTITY] == Y for X, Y in zip(extended, loc))
    return {
        "global_dim": len(glob),
        "local_dim": len(loc),
        "bijective": len(glob) == len(loc) == rank_restricted and ext_in_glob and restricted_in_loc and roundtrip,
    }


# ------------------------------------------------------------ induced sections


def equivariance_filter(Tm: TorsionLocalModule, p: SymbolicPoint, elements: list, family: dict) -> bool:
    """Whether m_{g h^-1} = h m_g holds for all g, g h^-1 in the element window."""
    f = Tm.field
    st = stabilizer(p)
    if st.kind is StabilizerKind.TRIVIAL:
        return True
    h = st.element
    for g in elements:
        gh = g * h.inverse()
        if gh in family:
            if family[gh] != linalg.matvec(Tm.involution, family[g], f):
                return False
    return True


def section_from_reps(Tm: TorsionLocalModule, p: SymbolicPoint, elements: list, values: dict) -> dict:
    """Extend values on coset representatives to the element window via m_{r h} = h m_r."""
    f = Tm.field
    out = {}
    for g in elements:
        rep, flip = reduce_to_rep(g, p)
        if rep not in values:
            return None
        out[g] = linalg.matvec(Tm.involution, values[rep], f) if flip else list(values[rep])
    return out


def brute_force_sections(Tm: TorsionLocalModule, p: SymbolicPoint, elements: list) -> tuple[set, set]:
    """All families passing the filter, and all families induced from representatives (over F_p)."""
    f = Tm.field
    if not f.p:
        raise DomainError("exhaustive enumeration needs a finite field")
    vectors = list(itertools.product(list(f.elements()), repeat=Tm.dim))
    filtered = set()
    for combo in itertools.product(vectors, repeat=len(elements)):
        fam = {g: list(v) for g, v in zip(elements, combo)}
        if equivariance_filter(Tm, p, elements, fam):
            filtered.add(_freeze(fam, elements))
    reps = sorted({reduce_to_rep(g, p)[0] for g in elements})
    induced = set()
    for combo in itertools.product(vectors, repeat=len(reps)):
        fam = section_from_reps(Tm, p, elements, {r: list(v) for r, v in zip(reps, combo)})
        if fam is not None:
            induced.add(_freeze(fam, elements))
    return filtered, induced


def _freeze(fam: dict, elements: list) -> tuple:
    return tuple(tuple(int(c) for c in fam[g]) for g in elements)


# ------------------------------------------------------------ exactness shadow


def socle_sequence(Tm: TorsionLocalModule) -> tuple[TorsionLocalModule, TorsionLocalModule]:
    """The submodule ker(rho) and the quotient T / ker(rho), with induced involutions."""
    f, d = Tm.field, Tm.dim
    ker = linalg.nullspace(Tm.rho, d, f) if d else []
    comp = linalg.extend_to_basis(ker, d, f)[len(ker):] if d else []
    P = linalg.transpose(ker + comp) if d else []
    Pi = linalg.inverse(P, f) if d else []
    k = len(ker)

    def conj(A):
        return linalg.matmul(Pi, linalg.matmul(A, P, f), f)

    def blocks(A, lo, hi):
        return [row[lo:hi] for row in A[lo:hi]]

    rho = conj(Tm.rho) if d else []
    inv = None
    if Tm.involution is not None:
        inv = conj(Tm.involution) if d else []
    if d and any(rho[i][j] for i in range(k) for j in range(k)):
        raise InvariantViolation("rho does not vanish on its kernel")
    sub = TorsionLocalModule(f, blocks(rho, 0, k), blocks(inv, 0, k) if inv is not None else None, Tm.N, Tm.kind)
    quo = TorsionLocalModule(f, blocks(rho, k, d), blocks(inv, k, d) if inv is not None else None, Tm.N, Tm.kind)
    return sub, quo


def exactness_shadow(Tm: TorsionLocalModule, p: SymbolicPoint, window: int = 2) -> bool:
    sub, quo = socle_sequence(Tm)
    return iota_star(Tm, p, window).dim == iota_star(sub, p, window).dim + iota_star(quo, p, window).dim


# ------------------------------------------------------------ fuzz driver


def random_torsion(field: Field, p: SymbolicPoint, rng: random.Random, max_len: int = 4) -> TorsionLocalModule:
    """A random torsion module over k[rho]/(rho^4) of length <= max_len, in a random basis."""
    n = rng.randint(0, max_len)
    parts = []
    while sum(parts) < n:
        parts.append(rng.randint(1, n - sum(parts)))
    kind = _kind_for(p)
    signs = [rng.choice((1, -1)) for _ in parts] if kind is not StabilizerKind.TRIVIAL else None
    Tm = TorsionLocalModule.from_partition(field, parts, signs, kind)
    Tm = TorsionLocalModule(field, Tm.rho, Tm.involution, 4, kind)
    if Tm.dim:
        Tm = Tm.conjugated(random_invertible(field, Tm.dim, rng))
    return Tm


def random_rank_one_sheaf(curve: SymbolicCurve, rng: random.Random) -> RankOneSheaf:
    from .symbolic import PointClass

    n = {}
    for b in curve:
        if b.cls is PointClass.HALF_P0:
            continue
        n[b] = rng.randint(0, 1) if b.cls is PointClass.TWO_TORSION else rng.randint(-3, 3)
    mod = RankOneModule(CanonicalForm(n), curve)
    vals = {}
    for b in curve:
        if rng.random() < 0.5:
            vals[b] = baseline(mod, b) - rng.randint(0, 3)
    return RankOneSheaf(mod, SubmoduleProfile(vals))


def roundtrip_check(seed: int, count: int, curve: SymbolicCurve, field: Field | None = None,
                    window: int = 2) -> list:
    """Run both round trips on a random family; one report dict per instance."""
    field = field or Field(5)
    rng = random.Random(seed)
    points = [SymbolicPoint(b, 1, 0) for b in curve]
    reports = []
    for i in range(count):
        p = points[i % len(points)]
        if i % 2:
            Tm = random_torsion(field, p, rng)
            M = gauged(Tm, p, window, rng)
            M.check()
            res = torsion_roundtrip_iso(M)
            res["kind"] = "torsion"
        else:
            S = random_rank_one_sheaf(curve, rng)
            res = rank_one_roundtrip(S, p, rng.randint(-3, 3))
            res["kind"] = "rank1"
        res["point"] = p.base.id
        res["stabilizer"] = stabilizer(p).kind.value
        res["pass"] = all(v for k, v in res.items() if isinstance(v, bool))
        reports.append(res)
    return reports
