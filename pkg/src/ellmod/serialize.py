"""JSON forms of the symbolic objects; every ``*_to_json`` has a matching parser."""

from __future__ import annotations

from .dihedral import GroupElement
from .divisor import Certificate, CanonicalForm, Divisor, InvariantVector, ZERO
from .errors import DomainError
from .localtype import GENERIC, SubmoduleProfile
from .symbolic import BaseLabel, PointClass, SymbolicCurve, SymbolicPoint, normalize


class ParseError(ValueError):
    """Malformed input document (as opposed to a well-formed but invalid value)."""


def _get(obj: dict, key: str):
    try:
        return obj[key]
    except (KeyError, TypeError):
        raise ParseError(f"missing field {key!r}") from None


def _int(v, what: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{what} must be an integer")
    return v


def curve_from_json(obj, ensure_origin: bool = True) -> SymbolicCurve:
    if not isinstance(obj, list):
        raise ParseError("bases must be a list of {id, class}")
    C = SymbolicCurve()
    for e in obj:
        try:
            C.add(str(_get(e, "id")), PointClass(_get(e, "class")))
        except ValueError as exc:
            if isinstance(exc, (ParseError, DomainError)):
                raise
            raise ParseError(f"unknown point class {e.get('class')!r}") from None
    if ensure_origin and C.origin is None:
        if "O" in [b.id for b in C]:
            raise DomainError("base 'O' is registered but is not the Origin")
        C.add("O", PointClass.ORIGIN)
    return C


def base_from_json(ref, curve: SymbolicCurve) -> BaseLabel:
    bid = str(ref)
    try:
        return curve[bid]
    except KeyError:
        raise DomainError(f"base {bid!r} is not registered") from None


def point_to_json(p: SymbolicPoint) -> dict:
    return {"base": p.base.id, "sign": p.sign, "shift": p.shift}


def point_from_json(obj: dict, curve: SymbolicCurve) -> SymbolicPoint:
    base = base_from_json(_get(obj, "base"), curve)
    return normalize(base, _int(obj.get("sign", 1), "sign"), _int(obj.get("shift", 0), "shift"))


def divisor_to_json(D: Divisor) -> list:
    return [{**point_to_json(p), "coeff": k} for p, k in D.items()]


def divisor_from_json(obj, curve: SymbolicCurve) -> Divisor:
    if not isinstance(obj, list):
        raise ParseError("a divisor is a list of {base, sign, shift, coeff}")
    D = ZERO
    for t in obj:
        D = D + Divisor.point(point_from_json(t, curve), _int(t.get("coeff", 1), "coeff"))
    return D


def canonical_to_json(cf: CanonicalForm) -> list:
    return [{"base": b.id, "n": k} for b, k in cf.items()]


def canonical_from_json(obj, curve: SymbolicCurve) -> CanonicalForm:
    if not isinstance(obj, list):
        raise ParseError("a canonical form is a list of {base, n}")
    cf = CanonicalForm({base_from_json(_get(e, "base"), curve): _int(_get(e, "n"), "n") for e in obj})
    cf.check_class_rules()
    return cf


def certificate_to_json(cert: Certificate) -> list:
    return [{"y": point_to_json(y), "m": m} for y, m in cert.steps]


def certificate_from_json(obj, curve: SymbolicCurve) -> Certificate:
    return Certificate(tuple((point_from_json(_get(e, "y"), curve), _int(_get(e, "m"), "m")) for e in obj))


def invariants_to_json(inv: InvariantVector) -> dict:
    return {
        "zsums": [{"base": b.id, "v": v} for b, v in sorted(inv.zsums.items())],
        "mod4": [{"base": b.id, "v": v} for b, v in sorted(inv.mod4.items())],
        "origin": inv.origin_inv,
    }


def invariants_from_json(obj: dict, curve: SymbolicCurve) -> InvariantVector:
    return InvariantVector(
        {base_from_json(e["base"], curve): e["v"] for e in _get(obj, "zsums")},
        {base_from_json(e["base"], curve): e["v"] for e in _get(obj, "mod4")},
        _get(obj, "origin"),
    )


def profile_to_json(prof: SubmoduleProfile) -> list:
    return prof.to_json()


def profile_from_json(obj, curve: SymbolicCurve) -> SubmoduleProfile:
    vals = {}
    for e in obj:
        v = _get(e, "v")
        if v != GENERIC:
            v = _int(v, "v")
        vals[base_from_json(_get(e, "base"), curve)] = v
    return SubmoduleProfile(vals)


def group_element_from_json(obj: dict) -> GroupElement:
    return GroupElement.from_json(obj)
