"""Batch command line: parse input files, run one operation, write a JSON report.

Exit codes: 0 verdict computed (including Fails / Infeasible), 1 usage or
parse error (also a report that does not verify), 2 precondition failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import duality, functions, hull as hullmod, optimize
from .algebra import ExplicitWindow, NCombination, probe_divisibility
from .errors import InvalidInstance, MonoconvexError
from .io import (
    SchemaError,
    digest,
    dumps,
    encode,
    encode_elements,
    load_json,
    parse_instance,
    parse_map,
    parse_scalar,
    parse_set,
    parse_table,
    parse_window,
)
from .scalar import ZERO, ExtendedScalar, ext_sum

COMMANDS = ("hull", "member", "check", "probe", "deriv", "subdiff", "conjugate", "duality",
            "sandwich", "extend", "value", "lagrange", "maxrule")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _json_arg(text, what):
    """Inline JSON, or a path to a JSON file."""
    if text is None:
        return None
    p = Path(text)
    if p.suffix == ".json" and p.exists():
        return load_json(p)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{what}: not JSON ({e})") from e


def build_parser():
    ap = _Parser(prog="monoconvex", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out", help="report path (default: stdout)")
        p.add_argument("--verify", metavar="REPORT", help="replay the certificates of an existing report")
        return p

    def bounds(p):
        p.add_argument("--bounds-terms", type=int)
        p.add_argument("--bounds-coeff", type=int)

    p = common(sub.add_parser("hull", help="convex hull of a finite set"))
    p.add_argument("--instance", required=True)
    p.add_argument("--set", required=True)
    p.add_argument("--strategy", default="auto", choices=["auto", "finite", "lattice", "fixpoint"])
    p.add_argument("--window")
    bounds(p)

    p = common(sub.add_parser("member", help="hull membership with a certificate"))
    p.add_argument("--instance", required=True)
    p.add_argument("--set", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--strategy", default="auto", choices=["auto", "finite", "lattice", "search"])
    p.add_argument("--window")
    bounds(p)

    p = common(sub.add_parser("check", help="class predicate on a function table"))
    p.add_argument("--function", required=True)
    p.add_argument("--property", required=True,
                   choices=["convex", "subadditive", "sublinear", "generalized-linear"])
    p.add_argument("--p-power", type=int)
    bounds(p)

    p = common(sub.add_parser("probe", help="n-divisibility probe"))
    p.add_argument("--instance", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--window")

    p = common(sub.add_parser("deriv", help="directional derivative"))
    p.add_argument("--function", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--h", required=True)
    p.add_argument("--schedule", required=True, help="comma separated n values")

    p = common(sub.add_parser("subdiff", help="subdifferential polyhedron"))
    p.add_argument("--function", required=True)
    p.add_argument("--x0", required=True)
    p.add_argument("--probes", required=True)

    p = common(sub.add_parser("conjugate", help="Fenchel conjugate at an additive map"))
    p.add_argument("--function", required=True)
    p.add_argument("--phi", required=True, help="coefficient vector")
    p.add_argument("--x", help="also run the Fenchel-Young check at x")

    for name, helptext in (("duality", "weak/strong Fenchel duality"),
                           ("sandwich", "affine sandwich witness or certificate"),
                           ("extend", "Hahn-Banach extension"),
                           ("value", "value function and its laws"),
                           ("lagrange", "Lagrangian multiplier scan"),
                           ("maxrule", "subdifferential of a pointwise max")):
        p = common(sub.add_parser(name, help=helptext))
        p.add_argument("--problem", required=True)
        if name == "duality":
            p.add_argument("--schedule", help="comma separated n values for the core probe")
    return ap


# ---------------------------------------------------------------- loading


def _load_function(path):
    obj = load_json(path)
    if not isinstance(obj, dict) or "instance" not in obj:
        raise SchemaError("function file needs an 'instance' field")
    obj = dict(obj)
    S = parse_instance(obj.pop("instance"))
    return S, parse_table(S, obj)


def _schedule(text):
    try:
        out = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise UsageError(f"bad schedule {text!r}") from e
    if not out or any(n < 1 for n in out):
        raise UsageError("schedule entries must be positive integers")
    return out


def _need_bounds(args, what):
    if args.bounds_terms is None or args.bounds_coeff is None:
        raise UsageError(f"{what} needs --bounds-terms and --bounds-coeff")


def _inputs(args):
    files, flags = {}, {}
    for k, v in sorted(vars(args).items()):
        if k in ("out", "verify") or v is None:
            continue
        if k in ("instance", "set", "function", "problem") or (isinstance(v, str) and v.endswith(".json")
                                                                and Path(v).exists()):
            files[k] = Path(v)
        else:
            flags[k] = v
    return files, flags


# ---------------------------------------------------------------- commands


def cmd_hull(args):
    S = parse_instance(load_json(args.instance))
    A = parse_set(S, load_json(args.set))
    strategy = args.strategy
    if strategy == "auto":
        strategy = hullmod.default_strategy(S)
    if strategy == "fixpoint":
        _need_bounds(args, "the fixpoint strategy")
    W = parse_window(S, _json_arg(args.window, "--window")) if args.window else None
    rep = hullmod.hull(A, S, strategy, args.bounds_terms, args.bounds_coeff, W)
    verdict = {"tag": "Hull", "hull": encode_elements(rep.hull.elements, S), "size": len(rep.hull.elements),
               "method": rep.method, "certified": rep.certified}
    return verdict, [], encode(rep.truncation, S), (S, A, rep)


def cmd_member(args):
    S = parse_instance(load_json(args.instance))
    A = parse_set(S, load_json(args.set))
    x = S.decode(_json_arg(args.point, "--point"))
    strategy = {"search": "fixpoint"}.get(args.strategy, args.strategy)
    resolved = hullmod.default_strategy(S) if strategy == "auto" else strategy
    if resolved == "fixpoint":
        _need_bounds(args, "combination search")
    W = parse_window(S, _json_arg(args.window, "--window")) if args.window else None
    v = hullmod.member(x, A, S, strategy, args.bounds_terms, args.bounds_coeff, W)
    certs = []
    verdict = {"tag": type(v).__name__, "point": S.encode(x)}
    if isinstance(v, hullmod.Member):
        certs.append({"kind": "combination", **encode(v.certificate, S)})
    elif isinstance(v, hullmod.NonMemberCertified) and v.separator is not None:
        a, b = v.separator
        certs.append({"kind": "separator", "a": encode(list(a)), "b": encode(b)})
    trunc = encode(getattr(v, "bounds", {}), S)
    return verdict, certs, trunc, None


def cmd_check(args):
    S, f = _load_function(args.function)
    prop = args.property
    if prop == "convex":
        _need_bounds(args, "the convexity check")
        v = functions.check_convex(f, args.bounds_terms, args.bounds_coeff, args.p_power)
    elif prop == "subadditive":
        v = functions.check_subadditive(f)
    else:
        if args.bounds_coeff is None:
            raise UsageError(f"{prop} needs --bounds-coeff (largest m checked)")
        fn = functions.check_n_sublinear if prop == "sublinear" else functions.check_generalized_n_linear
        v = fn(f, args.bounds_coeff)
    certs = []
    if v.certificate:
        certs.append(_encode_class_cert(v.certificate, S))
    verdict = {"tag": v.tag, "property": prop}
    trunc = {"bounds": encode(v.bounds), "off_window_skipped": v.skipped}
    return verdict, certs, trunc, None


def _encode_class_cert(c, S):
    out = {"kind": c["kind"], "negated": bool(c.get("negated", False))}
    if "combination" in c:
        out["combination"] = encode(c["combination"], S)
        out["x"] = S.encode(c["x"])
    if "pair" in c:
        out["pair"] = [S.encode(p) for p in c["pair"]]
    if "m" in c:
        out["m"] = c["m"]
        out["x"] = S.encode(c["x"])
    out["lhs"], out["rhs"] = str(c["lhs"]), str(c["rhs"])
    return out


def _canonical_order(S, els):
    def key(x):
        try:
            c = [Fraction(v) for v in S.coords(x)]
            den = max((v.denominator for v in c), default=1)
            return (den, sum(abs(v) for v in c), any(v < 0 for v in c), repr(x))
        except (AttributeError, TypeError):
            return (0, 0, False, repr(x))

    return sorted(els, key=key)


def cmd_probe(args):
    S = parse_instance(load_json(args.instance))
    W = parse_window(S, _json_arg(args.window, "--window")) if args.window else S.default_window()
    # smallest witnesses first, so a failing probe reports the simplest element
    ordered = ExplicitWindow(_canonical_order(S, S.enumerate(W)))
    v = probe_divisibility(S, args.n, ordered)
    verdict = {"tag": type(v).__name__, "n": args.n, "declared": S.declared(args.n)}
    certs = []
    if hasattr(v, "witness"):
        verdict["witness"] = S.encode(v.witness)
        certs.append({"kind": "no_solution", "element": S.encode(v.witness)})
    if hasattr(v, "source"):
        verdict["source"] = v.source
    if hasattr(v, "checked"):
        verdict["checked"] = v.checked
    return verdict, certs, {"window_size": len(W)}, None


def cmd_deriv(args):
    S, f = _load_function(args.function)
    x = S.decode(_json_arg(args.x, "--x"))
    h = S.decode(_json_arg(args.h, "--h"))
    r = duality.directional_derivative(f, x, h, _schedule(args.schedule))
    verdict = {"tag": "DirectionalDerivative", "value": str(r.value), "stabilized": r.stabilized}
    samples = [{"n": n, "g": None if g is None else S.encode(g), "value": str(v)} for n, g, v in r.samples]
    return verdict, [{"kind": "samples", "samples": samples}], {"schedule": _schedule(args.schedule)}, None


def cmd_subdiff(args):
    S, f = _load_function(args.function)
    x0 = S.decode(_json_arg(args.x0, "--x0"))
    probes = [S.decode(h) for h in _json_arg(args.probes, "--probes")]
    rep = duality.subdifferential(f, x0, probes)
    verdict = {"tag": "Empty" if rep.is_empty() else "Subdifferential",
               "constraints": [{"h": S.encode(h), "rhs": encode(r)} for h, r in rep.constraints]}
    if rep.polyhedron is not None and not rep.is_empty() and rep.dual.dimension <= 3 and rep.polyhedron.bounded():
        verdict["vertices"] = encode(rep.vertices())
    return verdict, [], {"probes": len(probes), "window_relative": True}, None


def cmd_conjugate(args):
    S, f = _load_function(args.function)
    dual = duality.dual_space(S)
    phi = duality.AdditiveWitness(dual, [Fraction(str(v)) for v in _json_arg(args.phi, "--phi")])
    val = duality.conjugate(f, phi)
    verdict = {"tag": "Conjugate", "value": str(val), "window_relative": True}
    certs = []
    if args.x is not None:
        x = S.decode(_json_arg(args.x, "--x"))
        fy = duality.fenchel_young_check(f, phi, x)
        certs.append({"kind": "fenchel_young", **encode(fy)})
    return verdict, certs, {"window_size": len(f.elements)}, None


def _problem(args):
    obj = load_json(args.problem)
    if not isinstance(obj, dict) or "instance" not in obj:
        raise SchemaError("problem file needs an 'instance' field")
    S1 = parse_instance(obj["instance"])
    S2 = parse_instance(obj["target_instance"]) if "target_instance" in obj else S1
    return obj, S1, S2


def cmd_duality(args):
    obj, S1, S2 = _problem(args)
    f = parse_table(S1, obj["f"], "f")
    g = parse_table(S2, obj["g"], "g")
    T = parse_map(S1, S2, obj.get("map"))
    grid = None
    if "dual_grid" in obj:
        d2 = duality.dual_space(S2)
        grid = [duality.AdditiveWitness(d2, [Fraction(str(c)) for c in v]) for v in obj["dual_grid"]]
    dirs = [S2.decode(h) for h in obj["directions"]] if "directions" in obj else None
    sched = _schedule(args.schedule) if args.schedule else obj.get("schedule")
    rep = duality.fenchel_duality(f, g, T, grid, dirs, sched)
    verdict = {"tag": "Duality", "P": str(rep.P), "D": str(rep.D), "gap": str(rep.gap),
               "weak_holds": rep.weak_holds, "strong_asserted": rep.strong_asserted,
               "strong_holds": rep.strong_holds, "search": rep.search}
    certs = []
    if rep.witness is not None:
        certs.append({"kind": "dual_witness", "phi": encode(rep.witness.coefficients)})
    if rep.core is not None:
        certs.append({"kind": "core_probe", "directions": [
            {"h": S2.encode(h), "resolved": None if r is None else {"n": r[0], "g": S2.encode(r[1])}}
            for h, r in rep.core.items()]})
    return verdict, certs, {"window_relative": True}, None


def cmd_sandwich(args):
    obj, S1, S2 = _problem(args)
    f = parse_table(S1, obj["f"], "f")
    g = parse_table(S2, obj["g"], "g")
    T = parse_map(S1, S2, obj.get("map"))
    w = duality.sandwich_witness(f, g, T)
    if isinstance(w, duality.AffineWitness):
        verdict = {"tag": "Witness", "a": encode(w.a.coefficients), "c": encode(w.c)}
        certs = [{"kind": "affine", "a": encode(w.a.coefficients), "c": encode(w.c)}]
    else:
        verdict = {"tag": "InfeasibleCertificate"}
        if w.upper is not None:
            verdict["c_upper"], verdict["c_lower"] = encode(w.upper[0]), encode(w.lower[0])
        certs = [{"kind": "bounds",
                  "constraints": [{"side": k, "coords": encode(list(c)), "value": encode(v)}
                                  for k, c, v in w.constraints],
                  "upper": None if w.upper is None else {"bound": encode(w.upper[0]),
                                                         "multipliers": encode(w.upper[1])},
                  "lower": None if w.lower is None else {"bound": encode(w.lower[0]),
                                                         "multipliers": encode(w.lower[1])}}]
    return verdict, certs, {"window_relative": True}, None


def cmd_extend(args):
    obj, S, _ = _problem(args)
    f = parse_table(S, obj["f"], "f")
    h = {S.decode(e): Fraction(str(v)) for e, v in obj["h"]}
    r = duality.hahn_banach_extend(f, h, int(obj.get("m_max", 4)))
    if isinstance(r, duality.Extension):
        verdict = {"tag": "Extension", "a": encode(r.witness.coefficients), "ranges": encode(r.ranges)}
    else:
        verdict = {"tag": "InfeasibleWithinWindow", "reason": r.reason}
    return verdict, [], {"window_relative": True}, None


def _constrained(obj, S):
    f = parse_table(S, obj["objective"], "f")
    gs = [parse_table(S, g, f"g{i + 1}") for i, g in enumerate(obj["constraints"])]
    return optimize.ConstrainedProblem(f, gs)


def _rhs(v):
    return [Fraction(str(c)) for c in v] if isinstance(v, list) else [Fraction(str(v))]


def cmd_value(args):
    obj, S, _ = _problem(args)
    P = _constrained(obj, S)
    grid = [_rhs(b) for b in obj["grid"]]
    v = optimize.value_function(P, grid)
    laws = optimize.value_function_laws(P, grid, obj.get("p"))
    verdict = {"tag": "ValueFunction",
               "values": [{"b": encode(list(b)), "v": str(val), "feasible": v.feasible[b]}
                          for b, val in v.values.items()]}
    certs = [{"kind": "law", "law": name, **encode(law)} for name, law in laws.items()
             if isinstance(law, optimize.LawVerdict)]
    verdict["laws"] = {name: (law.holds if isinstance(law, optimize.LawVerdict) else law)
                       for name, law in laws.items()}
    return verdict, certs, {"window_relative": True}, None


def cmd_lagrange(args):
    obj, S, _ = _problem(args)
    P = _constrained(obj, S)
    rep = optimize.find_multiplier(P, _rhs(obj["b"]), [_rhs(l) for l in obj["lambda_grid"]])
    verdict = {"tag": "Lagrangian", "multiplier": encode(rep.multiplier), "bound": str(rep.bound),
               "primal": str(rep.primal), "gap": str(rep.gap), "exact": rep.exact}
    certs = [{"kind": "scan", "scanned": [{"lambda": encode(l), "bound": str(b)} for l, b in rep.scanned]}]
    return verdict, certs, {"window_relative": True}, None


def cmd_maxrule(args):
    obj, S, _ = _problem(args)
    fs = [parse_table(S, t, f"f{i + 1}") for i, t in enumerate(obj["functions"])]
    x0 = S.decode(obj["x0"])
    probes = [S.decode(h) for h in obj["probes"]]
    r = optimize.subdiff_of_max_check(fs, x0, probes)
    verdict = {"tag": "MaxRule", "holds": r["holds"], "active": r["active"],
               "max_vertices": encode(r["max_vertices"]), "union_vertices": encode(r["union_vertices"])}
    return verdict, [], {"window_relative": True}, None


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


# ---------------------------------------------------------------- reports and replay


def make_report(args):
    verdict, certs, trunc, _ = HANDLERS[args.command](args)
    files, flags = _inputs(args)
    flags_enc = encode(flags)
    return {
        "command": args.command,
        "inputs": {"digest": digest({**files, "flags": flags_enc}), "flags": flags_enc},
        "verdict": verdict,
        "certificates": certs,
        "truncation": trunc,
    }


def _replay(args, report):
    """Certificate checks that use only the report and the input files."""
    problems = []
    cmd = args.command
    if cmd == "member":
        S = parse_instance(load_json(args.instance))
        A = parse_set(S, load_json(args.set))
        x = S.decode(report["verdict"]["point"])
        for c in report["certificates"]:
            if c["kind"] == "combination":
                terms = [(int(k), S.decode(e)) for k, e in c["terms"]]
                if not all(t in A for _, t in terms):
                    problems.append("combination uses points outside the set")
                if not hullmod.replay_member(NCombination.of(terms, c["m"]), x, S):
                    problems.append("combination does not reproduce the point")
            if c["kind"] == "separator":
                a = [Fraction(v) for v in c["a"]]
                b = Fraction(c["b"])
                dot = lambda p: sum((u * Fraction(v) for u, v in zip(a, S.coords(p))), Fraction(0))
                if any(dot(p) > b for p in A) or not dot(x) > b:
                    problems.append("separator does not separate")
    elif cmd == "check":
        S, f = _load_function(args.function)
        for c in report["certificates"]:
            g = -f if c["negated"] else f
            lhs, rhs = parse_scalar(c["lhs"]), parse_scalar(c["rhs"])
            if not (lhs > rhs or (c["kind"] == "homogeneity" and lhs != rhs)):
                problems.append("certificate sides are not a violation")
            if c["kind"] == "convex":
                comb = c["combination"]
                terms = [(int(k), S.decode(e)) for k, e in comb["terms"]]
                x = S.decode(c["x"])
                rel = NCombination.of(terms, comb["m"])
                if not hullmod.replay_member(rel, x, S):
                    problems.append("combination does not hold")
                if not g(x) * rel.m > ext_sum(g(t) * k for k, t in terms):
                    problems.append("convexity violation does not replay")
            elif c["kind"] == "subadditive":
                x, y = (S.decode(p) for p in c["pair"])
                if not g(S.add(x, y)) > g(x) + g(y):
                    problems.append("subadditivity violation does not replay")
            elif c["kind"] == "homogeneity":
                x, m = S.decode(c["x"]), c["m"]
                lhs = g(S.multiple(x, m)) if m else g(S.zero)
                if lhs == (g(x) * m if m else ZERO):
                    problems.append("homogeneity violation does not replay")
    elif cmd == "sandwich":
        obj, S1, S2 = _problem(args)
        f = parse_table(S1, obj["f"], "f")
        g = parse_table(S2, obj["g"], "g")
        T = parse_map(S1, S2, obj.get("map"))
        dual = duality.dual_space(S1)
        for c in report["certificates"]:
            if c["kind"] == "affine":
                a = duality.AdditiveWitness(dual, [Fraction(v) for v in c["a"]])
                cc = Fraction(c["c"])
                for x, v in f.items():
                    val = ExtendedScalar(a(x) + cc)
                    if not (duality._lower(g, T(x)) <= val <= v):
                        problems.append(f"witness fails at {S1.encode(x)}")
                        break
            elif c["kind"] == "bounds" and c["upper"] is not None:
                cons = [(k["side"], [Fraction(v) for v in k["coords"]], Fraction(k["value"]))
                        for k in c["constraints"]]
                cert = duality.InfeasibleCertificate(
                    cons,
                    (Fraction(c["upper"]["bound"]), {int(i): Fraction(m) for i, m in c["upper"]["multipliers"].items()}),
                    (Fraction(c["lower"]["bound"]), {int(i): Fraction(m) for i, m in c["lower"]["multipliers"].items()}))
                if not cert.replay(dual.dimension):
                    problems.append("bound certificate does not replay")
    elif cmd == "probe":
        S = parse_instance(load_json(args.instance))
        for c in report["certificates"]:
            if S.divide(S.decode(c["element"]), report["verdict"]["n"]):
                problems.append("claimed non-divisible element has a solution")
    return problems


def verify(args, report_path):
    report = load_json(report_path)
    fresh = make_report(args)
    problems = []
    if report.get("command") != args.command:
        problems.append("report was produced by a different command")
    if report.get("inputs", {}).get("digest") != fresh["inputs"]["digest"]:
        problems.append("input digest differs from the report")
    problems += _replay(args, report)
    if report.get("verdict") != fresh["verdict"]:
        problems.append("recomputed verdict differs from the report")
    return problems


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.verify:
            problems = verify(args, args.verify)
            if problems:
                for p in problems:
                    print(f"verify: {p}", file=stderr)
                return 1
            print("verify: ok", file=stdout)
            return 0
        text = dumps(make_report(args))
    except UsageError as e:
        print(f"usage error: {e}", file=stderr)
        return 1
    except (SchemaError, InvalidInstance, KeyError, ValueError) as e:
        print(f"input error: {e}", file=stderr)
        return 1
    except MonoconvexError as e:
        print(f"precondition failed: {type(e).__name__}: {e}", file=stderr)
        return 2
    if args.out:
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
