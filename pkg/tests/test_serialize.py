import json
import random

import pytest

from ellmod.dihedral import R, T
from ellmod.divisor import invariants, reduce_canonical
from ellmod.errors import DomainError
from ellmod.fields import Field
from ellmod.localtype import GENERIC, LocalType, RankOneModule, SubmoduleProfile, TorsionLocalModule, baseline
from ellmod.dihedral import StabilizerKind
from ellmod.serialize import (
    ParseError,
    canonical_from_json,
    canonical_to_json,
    certificate_from_json,
    certificate_to_json,
    curve_from_json,
    divisor_from_json,
    divisor_to_json,
    group_element_from_json,
    invariants_from_json,
    invariants_to_json,
    point_from_json,
    point_to_json,
    profile_from_json,
    profile_to_json,
)

from .generators import random_antisymmetric, random_canonical, random_point, standard_curve


def _through_text(obj):
    return json.loads(json.dumps(obj, sort_keys=True))


def test_curve_roundtrip_and_origin_insertion():
    C = standard_curve()
    again = curve_from_json(_through_text(C.to_json()))
    assert again.to_json() == C.to_json()
    bare = curve_from_json([{"id": "a", "class": "Generic"}])
    assert bare.origin is not None and bare.origin.id == "O"


def test_curve_parse_errors():
    with pytest.raises(ParseError):
        curve_from_json({"id": "a"})
    with pytest.raises(ParseError):
        curve_from_json([{"id": "a", "class": "bogus"}])
    with pytest.raises(ParseError):
        curve_from_json([{"class": "Generic"}])
    with pytest.raises(DomainError):
        curve_from_json([{"id": "O", "class": "Generic"}])


def test_points_and_divisors_roundtrip():
    C = standard_curve()
    rng = random.Random(0)
    for _ in range(100):
        p = random_point(C, rng)
        assert point_from_json(_through_text(point_to_json(p)), C) == p
        D, _ = random_antisymmetric(C, rng)
        assert divisor_from_json(_through_text(divisor_to_json(D)), C) == D


def test_divisor_parse_errors():
    C = standard_curve()
    with pytest.raises(ParseError):
        divisor_from_json({"base": "g"}, C)
    with pytest.raises(ParseError):
        divisor_from_json([{"base": "g", "shift": "1"}], C)
    with pytest.raises(ParseError):
        divisor_from_json([{"base": "g", "coeff": True}], C)
    with pytest.raises(DomainError):
        divisor_from_json([{"base": "zz"}], C)


def test_canonical_certificate_invariants_roundtrip():
    C = standard_curve()
    rng = random.Random(1)
    for _ in range(50):
        D, _ = random_antisymmetric(C, rng)
        cf, cert = reduce_canonical(D, C)
        assert canonical_from_json(_through_text(canonical_to_json(cf)), C) == cf
        back = certificate_from_json(_through_text(certificate_to_json(cert)), C)
        assert back == cert
        inv = invariants(D)
        assert invariants_from_json(_through_text(invariants_to_json(inv)), C) == inv


def test_canonical_parse_enforces_class_rules():
    C = standard_curve()
    with pytest.raises(DomainError):
        canonical_from_json([{"base": "t", "n": 2}], C)
    with pytest.raises(ParseError):
        canonical_from_json([{"base": "g"}], C)


def test_profile_roundtrip():
    C = standard_curve()
    rng = random.Random(2)
    for _ in range(20):
        M = RankOneModule(random_canonical(C, rng), C)
        vals = {b: baseline(M, b) - rng.randint(0, 2) for b in C if rng.random() < 0.6}
        if rng.random() < 0.3:
            vals[C["g"]] = GENERIC
        prof = SubmoduleProfile(vals)
        assert profile_from_json(_through_text(profile_to_json(prof)), C) == prof


def test_group_element_roundtrip():
    for g in [T(0), T(-3), R(0), R(5)]:
        assert group_element_from_json(_through_text(g.to_json())) == g


def test_local_type_roundtrip():
    for lt in [LocalType("i", vl=-1, vr=2), LocalType("ii", vlr=3, stab="sigma"), LocalType("ii", vlr=0, stab="sigma1")]:
        assert LocalType.from_json(_through_text(lt.to_json())) == lt
    with pytest.raises(DomainError):
        LocalType.from_json({"case": "ii", "vlr": 0, "stab": "tau"})


def test_torsion_module_roundtrip():
    for field in (Field(), Field(7)):
        for kind, signs in ((StabilizerKind.TRIVIAL, None), (StabilizerKind.SIGMA, [1, -1])):
            Tm = TorsionLocalModule.from_partition(field, [2, 1], signs, kind)
            back = TorsionLocalModule.from_json(_through_text(Tm.to_json()))
            assert back.to_json() == Tm.to_json()
            assert back.kind is kind
