"""Command-line front end: JSON in, JSON (or TSV) out.

Exit codes: 0 success, 1 domain error, 2 malformed input, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import descent, gluing
from .curve import Curve, CurvePoint, TorsionWarning, check_basis_label, to_symbolic
from .divisor import (
    Divisor,
    ZERO,
    canonical_from_invariants,
    invariants,
    reduce_canonical,
)
from .errors import DomainError, InvariantViolation
from .fields import Field
from .localtype import (
    RankOneModule,
    TorsionLocalModule,
    enumerate_profiles,
    ext_dim_case_i,
    ext_dim_case_ii,
    ext_fixed_case_ii,
    ext_formula_case_i,
    local_type_oracle,
    local_type_rank1,
)
from .quotring import ModulePresentation, iso_test
from .serialize import (
    ParseError,
    canonical_from_json,
    canonical_to_json,
    certificate_to_json,
    curve_from_json,
    divisor_from_json,
    invariants_to_json,
    point_from_json,
    point_to_json,
    profile_to_json,
)
from .symbolic import PointClass

EXIT_DOMAIN, EXIT_PARSE, EXIT_INVARIANT = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


# ------------------------------------------------------------------ input


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None


def _read_input(args) -> dict:
    if args.json is not None:
        doc = _load_json(args.json)
    elif args.input in (None, "-"):
        doc = _load_json(sys.stdin.read())
    else:
        try:
            doc = _load_json(Path(args.input).read_text())
        except OSError as exc:
            raise ParseError(f"cannot read {args.input}: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("input must be a JSON object")
    return doc


def _field(args, doc: dict) -> Field:
    text = args.field or doc.get("field", "Q")
    try:
        return Field.from_json(text) if isinstance(text, dict) else Field.parse(text)
    except (ValueError, KeyError) as exc:
        raise ParseError(str(exc)) from None


def _curve(args, doc: dict):
    bases = doc.get("bases")
    if args.symbolic:
        bases = _load_json(Path(args.symbolic).read_text())
    return curve_from_json(bases or [])


def _concrete(args, field: Field, sym):
    """Concrete curve and declared basis points from --curve, registered in ``sym``."""
    if not args.curve:
        return None
    doc = _load_json(Path(args.curve).read_text())
    C = Curve.from_json(doc["curve"]) if "curve" in doc else None
    if C is None:
        raise ParseError("--curve file needs a 'curve' object")
    basis = []
    for e in doc.get("basis", []):
        label = sym.add(str(e["id"]), PointClass(e["class"]))
        P = C.point(*e["point"])
        check_basis_label(label, P, C)
        basis.append((label, P))
    return C, basis


def _divisor(doc_terms, sym, concrete, bound: int) -> Divisor:
    plain, located = [], ZERO
    for t in doc_terms:
        if "point" in t:
            if concrete is None:
                raise ParseError("concrete points need --curve")
            C, basis = concrete
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TorsionWarning)
                p = to_symbolic(CurvePoint(*(C.field(c) for c in t["point"])), basis, C, bound)
            located = located + Divisor.point(p, t.get("coeff", 1))
        else:
            plain.append(t)
    return divisor_from_json(plain, sym) + located


def _matrix(field: Field, rows) -> list:
    if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
        raise ParseError("matrices are lists of rows")
    return [[field(c) for c in r] for r in rows]


def _mat_json(field: Field, A) -> list:
    return [[field.scalar_to_json(c) for c in row] for row in A]


def _torsion(doc, field: Field) -> TorsionLocalModule:
    if not isinstance(doc, dict):
        raise ParseError("torsion data must be an object")
    return TorsionLocalModule.from_json({**doc, "field": field.to_json()} if "field" not in doc else doc)


# --------------------------------------------------------------- commands


def cmd_reduce(args, doc):
    sym = _curve(args, doc)
    field = _field(args, doc)
    D = _divisor(doc.get("divisor", []), sym, _concrete(args, field, sym), args.bound)
    cf, cert = reduce_canonical(D, sym)
    inv = invariants(D)
    if canonical_from_invariants(inv, sym) != cf:
        raise InvariantViolation("invariant reconstruction disagrees with rewriting")
    return {"canonical": canonical_to_json(cf), "certificate": certificate_to_json(cert),
            "invariants": invariants_to_json(inv)}


def cmd_classify(args, doc):
    sym = _curve(args, doc)
    field = _field(args, doc)
    concrete = _concrete(args, field, sym)
    classes: dict = {}
    for i, terms in enumerate(doc.get("divisors", [])):
        cf, _ = reduce_canonical(_divisor(terms, sym, concrete, args.bound), sym)
        key = tuple(sorted((b.id, k) for b, k in cf.items()))
        classes.setdefault(key, {"canonical": canonical_to_json(cf), "members": []})["members"].append(i)
    return {"classes": [classes[k] for k in sorted(classes)]}


def cmd_localtype(args, doc):
    sym = _curve(args, doc)
    M = RankOneModule(canonical_from_json(doc.get("canonical", []), sym), sym)
    p = point_from_json(_get_obj(doc, "point"), sym)
    out = {"point": point_to_json(p)}
    closed = local_type_rank1(M, p)
    if args.inject_fault and closed.case == "i":
        closed = closed.shifted(1)
    out["local_type"] = closed.to_json()
    if args.oracle:
        N = args.bound if args.bound > 0 else None
        if N is None:
            reach = max((abs(q.shift) for q in M.divisor().support()), default=0)
            N = reach + 4
        oracle = local_type_oracle(M, p, N)
        out["oracle"] = oracle.to_json()
        if oracle != closed:
            raise InvariantViolation(f"closed form {closed.to_json()} != oracle {oracle.to_json()}")
    return out


def _get_obj(doc, key):
    if key not in doc:
        raise ParseError(f"missing field {key!r}")
    return doc[key]


def cmd_ext(args, doc):
    field = _field(args, doc)
    Tm = _torsion(_get_obj(doc, "torsion"), field)
    case = doc.get("case", "i")
    vM = int(doc.get("vM", 0))
    if case == "i":
        vl, vr = int(_get_obj(doc, "vl")), int(_get_obj(doc, "vr"))
        res = ext_dim_case_i(vM, vl, vr, Tm)
        formula = ext_formula_case_i(vM, vl, vr, Tm)
        if formula != res.dimension:
            raise InvariantViolation(f"Ext formula {formula} != direct {res.dimension}")
        reps = [{"l": [field.scalar_to_json(c) for c in a], "r": [field.scalar_to_json(c) for c in b]}
                for a, b in res.representatives]
        return {"case": "i", "dimension": res.dimension, "formula": formula, "representatives": reps}
    if case == "ii":
        vlr, sign = int(_get_obj(doc, "vlr")), int(doc.get("sign", 1))
        res = ext_dim_case_ii(vM, vlr, Tm, sign)
        fixed = ext_fixed_case_ii(vM, vlr, Tm, sign)
        if fixed != res.dimension:
            raise InvariantViolation(f"Ext routes disagree: {fixed} != {res.dimension}")
        reps = [{"lr": [field.scalar_to_json(c) for c in a[0]]} for a in res.representatives]
        return {"case": "ii", "dimension": res.dimension, "fixed_route": fixed, "representatives": reps}
    raise ParseError(f"case must be 'i' or 'ii', got {case!r}")


def cmd_submodules(args, doc):
    sym = _curve(args, doc)
    M = RankOneModule(canonical_from_json(doc.get("canonical", []), sym), sym)
    depth = args.bound if args.bound > 0 else int(doc.get("depth", 1))
    bases = [sym[b] for b in doc["points"]] if "points" in doc else None
    profiles = [profile_to_json(p) for p in enumerate_profiles(M, depth, bases)]
    return {"count": len(profiles), "profiles": profiles}


def _base_module(doc, field):
    X = _matrix(field, _get_obj(doc, "x"))
    N = int(doc.get("N", max(len(X), 1)))
    R = descent.base_ring(field, N)
    return ModulePresentation.from_matrices(R, {"x": X}) if X else ModulePresentation(R, [], [])


def cmd_pullback(args, doc):
    field = _field(args, doc)
    N = descent.z2_pullback(_base_module(doc, field))
    return {"y": _mat_json(field, N.y), "sigma_bar": _mat_json(field, N.sigma_bar),
            "N": N.module.ring.params["N"], "descends": descent.descends(N)}


def cmd_descend(args, doc):
    field = _field(args, doc)
    Y = _matrix(field, _get_obj(doc, "y"))
    S = _matrix(field, _get_obj(doc, "sigma_bar"))
    N = descent.DoubleCoverModule.from_matrices(field, Y, S, doc.get("N"))
    crit = descent.descent_criterion(N)
    M = descent.z2_descend(N)
    back = iso_test(descent.z2_pullback(M).module, N.module, ["sigma_bar"])
    if not back.verdict:
        raise InvariantViolation("pullback of the descended module is not isomorphic to the input")
    return {"descends": True, "criterion": crit, "x": _mat_json(field, M.actions["x"]) if M.dim else [],
            "N": M.ring.params["N"]}


def cmd_glue_roundtrip(args, doc):
    sym = _curve(args, doc)
    field = _field(args, doc) if (args.field or "field" in doc) else Field(5)
    count = int(doc.get("count", args.bound if args.bound > 0 else 20))
    reports = gluing.roundtrip_check(int(doc.get("seed", args.seed)), count, sym, field)
    return {"instances": reports, "passed": sum(r["pass"] for r in reports),
            "failed": sum(not r["pass"] for r in reports)}


def cmd_verify(args, doc):
    out = {}
    flat_field = Field.parse(args.field) if args.field else Field()
    out["flatness"] = descent.verify_flatness_counterexample(flat_field, doc.get("q", 2))
    full_field = Field.parse(args.field) if args.field else Field(7)
    out["not_full"] = descent.verify_fullness_counterexample(full_field, doc.get("q_cube", 2))
    return out


def cmd_difference(args, doc):
    if "f1" in doc or "f" in doc:
        q = doc.get("q", 2)
        if "f" in doc:
            F1, F2 = descent.rank_one_elliptic(doc["f"], q)
            f = descent.rank_one_difference(F1, F2, q)
            return {"f1": str(F1), "f2": str(F2), "f": str(f)}
        f = descent.rank_one_difference(doc["f1"], _get_obj(doc, "f2"), q)
        return {"f": str(f)}
    field = _field(args, doc)
    q = doc.get("q", 2)
    Tm = _matrix(field, _get_obj(doc, "t"))
    A = _matrix(field, _get_obj(doc, "tau"))
    D = descent.difference_ring(field, q, int(doc.get("N", max(len(Tm), 1))))
    Dm = ModulePresentation.from_matrices(D, {"t": Tm}, {"tau": (A, "qshift")})
    E = descent.difference_to_elliptic(Dm)
    back = descent.elliptic_to_difference(E)
    exact = back.actions["t"] == Dm.actions["t"] and back.maps["tau"].matrix == Dm.maps["tau"].matrix
    if not exact:
        raise InvariantViolation("difference module did not round-trip")
    return {"elliptic": {"t": _mat_json(field, E.actions["t"]), "e": _mat_json(field, E.actions["e"]),
                         "sigma1": _mat_json(field, E.maps["sigma1"].matrix),
                         "sigma": _mat_json(field, E.maps["sigma"].matrix)},
            "roundtrip": exact}


COMMANDS = {
    "reduce": (cmd_reduce, "divisor -> canonical form, certificate, invariants"),
    "classify": (cmd_classify, "batch of divisors -> distinct canonical forms"),
    "localtype": (cmd_localtype, "rank-1 module and point -> local type"),
    "ext": (cmd_ext, "local lattices and torsion module -> Ext dimension"),
    "submodules": (cmd_submodules, "rank-1 module and depth -> admissible lattice profiles"),
    "pullback": (cmd_pullback, "module over k[x]/(x^N) -> module on the double cover"),
    "descend": (cmd_descend, "module on the double cover -> descended module"),
    "glue-roundtrip": (cmd_glue_roundtrip, "randomized gluing round trips"),
    "verify-counterexamples": (cmd_verify, "flatness and fullness counterexample reports"),
    "difference": (cmd_difference, "elliptic <-> q-difference translation"),
}

NO_INPUT = {"verify-counterexamples", "glue-roundtrip"}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ellmod", description="Exact computations with rank-1 elliptic modules.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        s = sub.add_parser(name, help=help_text)
        s.add_argument("input", nargs="?", help="JSON input file, or - for stdin")
        s.add_argument("--json", help="inline JSON input")
        s.add_argument("--field", help="Q or Fp:<p>")
        s.add_argument("--curve", help="concrete curve and basis points (JSON file)")
        s.add_argument("--symbolic", help="orbit bases (JSON file)")
        s.add_argument("--bound", type=int, default=0, help="search bound / truncation / count")
        s.add_argument("--out", choices=("json", "tsv"), default="json")
        s.add_argument("--oracle", action="store_true", help="cross-check against the iteration oracle")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return p


# ------------------------------------------------------------------ output


def _tsv(result) -> str:
    rows = None
    for key in ("instances", "classes", "profiles"):
        if isinstance(result.get(key), list):
            rows = result[key]
            break
    if rows is None:
        return "".join(f"{k}\t{json.dumps(v, sort_keys=True)}\n" for k, v in sorted(result.items()))
    cols = sorted({k for r in rows for k in (r if isinstance(r, dict) else {"value": r})})
    lines = ["\t".join(cols)]
    for r in rows:
        r = r if isinstance(r, dict) else {"value": r}
        lines.append("\t".join(v if isinstance(v := r.get(c, ""), str) else json.dumps(v, sort_keys=True)
                               for c in cols))
    return "\n".join(lines) + "\n"


def _emit(result, fmt: str, stream, lines: bool = False) -> None:
    if fmt == "tsv":
        stream.write(_tsv(result))
    elif lines:
        # one report per line, then the summary
        for r in result["instances"]:
            stream.write(json.dumps(r, sort_keys=True) + "\n")
        summary = {k: v for k, v in result.items() if k != "instances"}
        stream.write(json.dumps({"summary": summary}, sort_keys=True) + "\n")
    else:
        stream.write(json.dumps(result, sort_keys=True) + "\n")


def _error(kind: str, exc: BaseException, stream) -> None:
    stream.write(json.dumps({"error": {"type": kind, "class": type(exc).__name__, "message": str(exc)}},
                            sort_keys=True) + "\n")


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.command in NO_INPUT and args.input is None and args.json is None:
            doc = {}
        else:
            doc = _read_input(args)
        result = COMMANDS[args.command][0](args, doc)
    except ParseError as exc:
        _error("parse-error", exc, stdout)
        return EXIT_PARSE
    except InvariantViolation as exc:
        _error("internal-invariant-violation", exc, stdout)
        return EXIT_INVARIANT
    except DomainError as exc:
        _error("domain-error", exc, stdout)
        return EXIT_DOMAIN
    except (KeyError, TypeError, ValueError, ArithmeticError) as exc:
        _error("parse-error", exc, stdout)
        return EXIT_PARSE
    _emit(result, args.out, stdout, lines=args.command == "glue-roundtrip")
    return 0


def main() -> None:
    sys.exit(run())
