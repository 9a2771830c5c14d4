import itertools
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from ellmod import linalg
from ellmod.fields import Field, FpElement

QQ = Field()
F7 = Field(7)


def test_parse_descriptors():
    assert Field.parse("Q") == QQ
    assert Field.parse("Fp:13") == Field(13)
    for bad in ("Fp:9", "Fp:2", "Fp:x", "R", ""):
        with pytest.raises(ValueError):
            Field.parse(bad)


def test_fp_arithmetic_is_modular():
    a, b = F7(3), F7(5)
    assert a + b == F7(1)
    assert a * b == F7(1)
    assert a / b == F7(3 * 3)
    assert -a == F7(4)
    assert a ** 6 == F7(1)
    assert isinstance(a, FpElement)
    with pytest.raises(ZeroDivisionError):
        a / F7(0)


def test_q_scalars_are_exact_fractions():
    assert QQ("3/4") == Fraction(3, 4)
    assert QQ.scalar_to_json(QQ("-3/4")) == "-3/4"
    assert QQ(1) / 3 * 3 == 1


def test_json_roundtrip():
    for f in (QQ, F7, Field(10007)):
        assert Field.from_json(f.to_json()) == f


matrices = st.lists(st.lists(st.integers(-4, 4), min_size=4, max_size=4), min_size=1, max_size=5)


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_rank_and_nullspace_match_sympy(rows):
    A = [[QQ(c) for c in r] for r in rows]
    assert linalg.rank(A, 4, QQ) == sympy.Matrix(rows).rank()
    for v in linalg.nullspace(A, 4, QQ):
        assert all(c == 0 for c in linalg.matvec(A, v, QQ))
    assert len(linalg.nullspace(A, 4, QQ)) == 4 - sympy.Matrix(rows).rank()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=3, max_size=3))
def test_det_and_inverse_match_sympy(rows):
    A = [[QQ(c) for c in r] for r in rows]
    d = sympy.Matrix(rows).det()
    assert linalg.det(A, QQ) == Fraction(int(d))
    inv = linalg.inverse(A, QQ)
    if d == 0:
        assert inv is None
    else:
        assert linalg.matmul(A, inv, QQ) == linalg.identity(3, QQ)


def test_fp_rank_against_row_space_count():
    # a rank-r row space over F_7 has exactly 7^r elements
    rng = random.Random(3)
    for _ in range(40):
        rows = [[rng.randrange(7) for _ in range(4)] for _ in range(3)]
        A = [[F7(c) for c in r] for r in rows]
        span = {tuple(sum(c * r[j] for c, r in zip(cs, rows)) % 7 for j in range(4))
                for cs in itertools.product(range(7), repeat=3)}
        r = linalg.rank(A, 4, F7)
        assert len(span) == 7 ** r
        assert len(linalg.nullspace(A, 4, F7)) == 4 - r


def test_extend_to_basis():
    v = [[QQ(1), QQ(1), QQ(0)]]
    full = linalg.extend_to_basis(v, 3, QQ)
    assert full[0] == v[0]
    assert linalg.rank(full, 3, QQ) == 3
