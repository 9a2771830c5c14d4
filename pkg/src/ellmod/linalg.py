"""Dense exact linear algebra over a ``Field``.

Matrices are lists of rows; a matrix acts on column vectors.  Elimination runs
on raw values (``int`` mod p, or gmpy2 rationals over Q) and results are
converted back to field elements at the boundary.
"""

from __future__ import annotations

from fractions import Fraction

from gmpy2 import mpq

from .fields import Field, FpElement


def _raw(x, field: Field):
    if field.p:
        if isinstance(x, FpElement):
            return x.v
        return field(x).v
    return Fraction(x)


def _wrap(v, field: Field):
    return FpElement(v, field.p) if field.p else v


def _to_fraction(v) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


def _rref_raw(rows: list[list], ncols: int, p: int):
    if not p:
        red, pivots = _rref_loop([[mpq(v) for v in r] for r in rows], ncols, 0)
        return [[_to_fraction(v) for v in r] for r in red], pivots
    return _rref_loop([list(r) for r in rows], ncols, p)


def _rref_loop(rows: list[list], ncols: int, p: int):
    pivots = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        if r == nrows:
            break
        piv = None
        for i in range(r, nrows):
            if rows[i][c]:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        lead = rows[r][c]
        if p:
            inv = pow(lead, -1, p)
            pr = [(v * inv) % p for v in rows[r]]
        else:
            pr = [v / lead for v in rows[r]]
        rows[r] = pr
        nz = [j for j in range(ncols) if pr[j]]
        for i in range(nrows):
            if i == r:
                continue
            row = rows[i]
            f = row[c]
            if not f:
                continue
            if p:
                for j in nz:
                    row[j] = (row[j] - f * pr[j]) % p
            else:
                for j in nz:
                    row[j] = row[j] - f * pr[j]
        pivots.append(c)
        r += 1
    return rows[:r], pivots


def rref(rows: list[list], ncols: int, field: Field):
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    raw = [[_raw(x, field) for x in row] for row in rows]
    red, pivots = _rref_raw(raw, ncols, field.p)
    return [[_wrap(v, field) for v in row] for row in red], pivots


def rank(rows: list[list], ncols: int, field: Field) -> int:
    if not rows or not ncols:
        return 0
    raw = [[_raw(x, field) for x in row] for row in rows]
    return len(_rref_raw(raw, ncols, field.p)[1])


def nullspace(rows: list[list], ncols: int, field: Field) -> list[list]:
    """Basis of {v : rows @ v = 0}."""
    raw = [[_raw(x, field) for x in row] for row in rows]
    red, pivots = _rref_raw(raw, ncols, field.p)
    pivset = set(pivots)
    zero = 0 if field.p else Fraction(0)
    basis = []
    for f in range(ncols):
        if f in pivset:
            continue
        v = [zero] * ncols
        v[f] = 1 if field.p else Fraction(1)
        for row, c in zip(red, pivots):
            if row[f]:
                v[c] = (-row[f]) % field.p if field.p else -row[f]
        basis.append([_wrap(x, field) for x in v])
    return basis


def row_space(rows: list[list], ncols: int, field: Field) -> list[list]:
    return rref(rows, ncols, field)[0]


def solve(a: list[list], b: list, field: Field):
    """One solution x of a @ x = b, or None."""
    ncols = len(a[0]) if a else 0
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    red, pivots = rref(aug, ncols + 1, field)
    if ncols in pivots:
        return None
    x = [field.zero] * ncols
    for row, c in zip(red, pivots):
        x[c] = row[ncols]
    return x


def identity(n: int, field: Field) -> list[list]:
    return [[field.one if i == j else field.zero for j in range(n)] for i in range(n)]


def zeros(m: int, n: int, field: Field) -> list[list]:
    return [[field.zero] * n for _ in range(m)]


def matmul(a: list[list], b: list[list], field: Field) -> list[list]:
    if not a:
        return []
    inner = len(b)
    ncols = len(b[0]) if b else 0
    if not inner:
        return zeros(len(a), ncols, field)
    p = field.p
    if p:
        def conv(x):
            return x.v if x.__class__ is FpElement else _raw(x, field)
    else:
        def conv(x):
            return mpq(x if x.__class__ is Fraction else _raw(x, field))
    ra = [[conv(x) for x in row] for row in a]
    rb = [[conv(x) for x in row] for row in b]
    cols = list(zip(*rb))
    zero = field.zero
    out = []
    for row in ra:
        nz = [(k, v) for k, v in enumerate(row) if v]
        new = []
        for col in cols:
            s = sum([v * col[k] for k, v in nz])
            if not s:
                new.append(zero)
            elif p:
                new.append(FpElement(s, p))
            else:
                new.append(_to_fraction(mpq(s)))
        out.append(new)
    return out


def matvec(a: list[list], v: list, field: Field) -> list:
    return [row[0] for row in matmul(a, [[x] for x in v], field)] if a else []


def add(a: list[list], b: list[list]) -> list[list]:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def sub(a: list[list], b: list[list]) -> list[list]:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def scale(c, a: list[list]) -> list[list]:
    return [[c * x for x in row] for row in a]


def transpose(a: list[list]) -> list[list]:
    return [list(col) for col in zip(*a)]


def is_zero(a: list[list]) -> bool:
    return all(not x for row in a for x in row)


def inverse(a: list[list], field: Field):
    """Inverse matrix, or None when singular."""
    n = len(a)
    aug = [list(row) + e for row, e in zip(a, identity(n, field))]
    red, pivots = rref(aug, 2 * n, field)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        return None
    return [row[n:] for row in red]


def det(a: list[list], field: Field):
    n = len(a)
    p = field.p
    rows = [[_raw(x, field) for x in row] for row in a]
    result = 1 if p else Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if rows[i][c]), None)
        if piv is None:
            return field.zero
        if piv != c:
            rows[c], rows[piv] = rows[piv], rows[c]
            result = -result
        lead = rows[c][c]
        result = result * lead
        inv = pow(lead, -1, p) if p else 1 / lead
        for i in range(c + 1, n):
            f = rows[i][c]
            if f:
                f = f * inv
                rows[i] = [(x - f * y) % p if p else x - f * y for x, y in zip(rows[i], rows[c])]
    return _wrap(result % p if p else result, field)


def mat_power(a: list[list], e: int, field: Field) -> list[list]:
    out = identity(len(a), field)
    for _ in range(e):
        out = matmul(out, a, field)
    return out


def kernel_basis(a: list[list], ncols: int, field: Field) -> list[list]:
    return nullspace(a, ncols, field) if a else [
        [field.one if i == j else field.zero for i in range(ncols)] for j in range(ncols)
    ]


def image_basis(a: list[list], field: Field) -> list[list]:
    """Basis (as vectors) of the column space of ``a``."""
    if not a or not a[0]:
        return []
    return row_space(transpose(a), len(a), field)


def extend_to_basis(vectors: list[list], n: int, field: Field) -> list[list]:
    """Complete an independent list of vectors to a basis of k^n with unit vectors."""
    current = [list(v) for v in vectors]
    r = rank(current, n, field) if current else 0
    for i in range(n):
        e = [field.one if j == i else field.zero for j in range(n)]
        if rank(current + [e], n, field) > r:
            current.append(e)
            r += 1
        if r == n:
            break
    return current
