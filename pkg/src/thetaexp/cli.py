"""Command-line interface.

Every subcommand writes either JSON ``{"config", "results", "checks"}`` or
CSV (``# config:`` and ``# checks:`` comment lines, a header row, then data).
Exit status: 0 on success, 1 if any check is false, 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import sys
from fractions import Fraction
from math import isqrt

import numpy as np

from . import __version__, _kernels
from .construction import (
    BasePolicy,
    ConstructionParams,
    SparseSpec,
    as_fraction,
    auto_checkpoints,
    check_monotonicity,
    find_n0,
    holder_witness_bounds,
    insertion_positions,
    ratio_envelope,
    ratio_series,
    sequence_diagnostics,
    synthesize,
)
from .dimension import holder_exponent_estimate, jarnik_bounds, moran_bracket
from .expansion import DigitWord, digit_stream, verify_metric
from .intervals import FloorAmbiguityError
from .measure import (
    digit_law,
    first_digits,
    invariance_report,
    orbit_stats,
    sample_gamma,
)
from .qfield import FieldSpec, QuadraticNumber, to_decimal

# flags that never change results and are kept out of the embedded config
_NON_RESULT_FLAGS = {"jobs", "output", "func"}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# expression grammar: integers, decimals, rationals, sqrt(n), theta, + - * / ( )


def parse_expr(text: str, spec: FieldSpec) -> QuadraticNumber:
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise UsageError(f"cannot parse {text!r}: {exc.msg}") from None

    def sqrt_of(n: int) -> QuadraticNumber:
        if n < 0:
            raise UsageError("sqrt of a negative number")
        s = isqrt(n)
        if s * s == n:
            return spec(s)
        if n % spec.m == 0:
            t = isqrt(n // spec.m)
            if t * t * spec.m == n:
                return spec(0, t)
        raise UsageError(f"sqrt({n}) is not in Q(sqrt({spec.m}))")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return spec.from_rational(Fraction(repr(node.value)) if isinstance(node.value, float)
                                      else node.value)
        if isinstance(node, ast.Name) and node.id == "theta":
            return spec.theta
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            return a / b
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt" \
                and len(node.args) == 1 and not node.keywords:
            v = ev(node.args[0])
            if not v.is_rational or v.r != 1:
                raise UsageError("sqrt takes an integer argument")
            return sqrt_of(v.p)
        raise UsageError(f"unsupported syntax in {text!r}")

    return ev(tree)


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(" ", "").split(",") if t]


# ---------------------------------------------------------------------------
# rendering


def _num(x: QuadraticNumber, digits: int) -> dict:
    return {"decimal": to_decimal(x, digits), "exact": [x.p, x.q, x.r]}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _emit(args, results: dict, rows: list[dict] | None, checks: dict[str, bool], out) -> int:
    config = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in _NON_RESULT_FLAGS}
    config["version"] = __version__
    checks = {k: bool(v) for k, v in checks.items()}
    if args.format == "json":
        doc = {"config": config, "results": _jsonable(results), "checks": checks}
        out.write(json.dumps(doc, sort_keys=True, indent=2))
        out.write("\n")
    else:
        out.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        out.write("# checks: " + json.dumps(checks, sort_keys=True) + "\n")
        if rows is None:
            rows = [_flatten(results)]
        if rows:
            writer = csv.DictWriter(out, fieldnames=list(rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            for r in rows:
                writer.writerow({k: _csv_cell(v) for k, v in r.items()})
    return 0 if all(checks.values()) else 1


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return v


def _flatten(d: dict, prefix="") -> dict:
    flat = {}
    for k, v in d.items():
        if isinstance(v, dict):
            flat.update(_flatten(v, f"{prefix}{k}."))
        else:
            flat[f"{prefix}{k}"] = _jsonable(v)
    return flat


# ---------------------------------------------------------------------------
# commands


def _params(args) -> ConstructionParams:
    p = ConstructionParams(
        args.m, args.M, as_fraction(args.alpha), SparseSpec(as_fraction(args.gamma)),
        base=BasePolicy.parse(args.base),
    )
    if args.N0 is not None:
        return p.with_n0(args.N0, False)
    report = find_n0(p, args.scan)
    if report.n0 is None:
        raise UsageError(
            f"no N0 in scan range (k <= {args.scan}); pass --N0 to force one. {report.note}"
        )
    return p.with_n0(report.n0, True)


def cmd_expand(args, out):
    spec = FieldSpec(args.m)
    x = parse_expr(args.x, spec)
    w = digit_stream(x, args.n)
    results = {"x": _num(x, args.decimals), "digits": list(w.digits), "terminated": w.terminated}
    rows = [{"index": i, "digit": d} for i, d in enumerate(w.digits, 1)]
    return results, rows, {}


def cmd_orbit(args, out):
    if args.x is not None:
        spec = FieldSpec(args.m)
        x = parse_expr(args.x, spec)
        st = orbit_stats(x, args.n)
        source = {"x": _num(x, args.decimals)}
    else:
        xf = float(sample_gamma(args.m, args.seed, 1)[0])
        st = orbit_stats(xf, args.n, args.m)
        source = {"x_sample": repr(xf), "seed": args.seed}
    rows = [{"k": s.k, "digit": s.digit, "S": s.S, "L": s.L, "R": s.R} for s in st.stats]
    results = {**source, "terminated": st.terminated, "precision_bits": st.precision_bits,
               "final": rows[-1] if rows else None}
    return results, rows, {}


def cmd_construct(args, out):
    p = _params(args)
    w = synthesize(p, args.depth)
    mono = check_monotonicity(w, p)
    positions = insertion_positions(p, args.depth)
    blocks = {}
    envelope_ok = True
    for pos, k in positions:
        if pos < 3:
            continue
        b = ratio_envelope(p, w, k)
        envelope_ok &= b.ok
        for s, low in zip(b.samples, b.lows):
            blocks[s.n] = (k, low, b.high)
    cps = auto_checkpoints(args.depth) if args.checkpoints == "auto" else _int_list(args.checkpoints)
    rows = []
    for s in ratio_series(w, cps):
        k, low, high = blocks.get(s.n, (None, None, None))
        inside = None if k is None else (low <= s.R <= high)
        rows.append({"n": s.n, "L": s.L, "S": s.S, "R": s.R, "block_k": k,
                     "env_low": low, "env_high": high, "inside": inside})
    results = {
        "N0": p.N0, "N0_verified": p.N0_verified,
        "insertions": [{"k": k, "position": pos, "digit": w.digits[pos - 1]} for pos, k in positions],
        "depth": args.depth,
    }
    checks = {"monotone_at_least_M": all(mono.at_least_M),
              "monotone_nondecreasing": all(mono.nondecreasing),
              "envelope": envelope_ok}
    return results, rows, checks


def cmd_ratio(args, out):
    if args.digits:
        digits = _int_list(args.digits)
    else:
        M, depth, seed = _int_list(args.random)
        digits = np.random.default_rng(seed).integers(args.m, M + 1, size=depth).tolist()
    w = DigitWord(tuple(digits), FieldSpec(args.m))
    cps = auto_checkpoints(len(w)) if args.checkpoints == "auto" else _int_list(args.checkpoints)
    rows = [{"n": s.n, "L": s.L, "S": s.S, "R": s.R, "defined": s.defined}
            for s in ratio_series(w, cps)]
    return {"depth": len(w)}, rows, {}


def cmd_conditions(args, out):
    p = ConstructionParams(args.m, args.M, as_fraction(args.alpha), SparseSpec(as_fraction(args.gamma)))
    rep = find_n0(p, args.scan)
    rows = [{"k": r.k, "n_k_bits": r.n_k.bit_length(), "condA": r.cond_a, "condB": r.cond_b,
             "condC_gap_log2": math.log2(r.gap) if r.gap > 0 else float("-inf"),
             "condC_limit": r.gap_limit, "A_ok": r.a_ok, "B_ok": r.b_ok, "C_ok": r.c_ok}
            for r in rep.records]
    results = {"N0": rep.n0, "k_min": p.sparse.k_min, "scan_limit": rep.scan_limit,
               "edge_increment": rep.edge_increment, "edge_envelope": rep.edge_envelope,
               "note": rep.note}
    if args.diagnostics:
        results["diagnostics"] = [vars(d) for d in sequence_diagnostics(_int_list(args.diagnostics),
                                                                         p.sparse)]
    return results, rows, {}


def cmd_verify_metric(args, out):
    spec = FieldSpec(args.m)
    if args.digits:
        words = [DigitWord(tuple(_int_list(args.digits)), spec)]
    else:
        rng = np.random.default_rng(args.seed)
        words = []
        for _ in range(args.words):
            n = int(rng.integers(1, args.max_depth + 1))
            words.append(DigitWord(tuple(rng.integers(args.m, args.max_digit + 1, size=n).tolist()), spec))
    growth = length = sens = ratio = 0
    rows = []
    for w in words:
        r = verify_metric(w)
        growth += not r.q_growth_ok
        length += not r.length_bounds_ok
        sens += not all(r.sensitivity_ok)
        ratio += not r.denominator_ratio_ok
        if args.digits or not r.all_ok:
            rows.append({"word": list(w.digits), "growth": r.q_growth_ok, "length": r.length_bounds_ok,
                         "sensitivity": all(r.sensitivity_ok), "denominator_ratio": r.denominator_ratio_ok,
                         "Q_n": to_decimal(r.witnesses["Q_n"], 12)})
    results = {"words": len(words), "failures": {"growth": growth, "length": length,
                                                 "sensitivity": sens, "denominator_ratio": ratio}}
    checks = {"growth": growth == 0, "length": length == 0, "sensitivity": sens == 0,
              "denominator_ratio": ratio == 0}
    return results, rows or None, checks


def cmd_verify_monotone(args, out):
    p = _params(args)
    w = synthesize(p, args.depth)
    rep = check_monotonicity(w, p)
    rows = [{"k": r.k, "position": r.position, "digit": r.digit, "prefix_sum": r.prefix_sum,
             "at_least_M": ok} for r, ok in zip(rep.witnesses, rep.at_least_M)]
    checks = {"at_least_M": all(rep.at_least_M), "nondecreasing": all(rep.nondecreasing)}
    return {"N0": p.N0, "N0_verified": p.N0_verified}, rows, checks


def cmd_verify_holder(args, out):
    p = _params(args)
    w = synthesize(p, args.depth)
    hb = holder_witness_bounds(w, p)
    est = {}
    checks = {"digit_growth": all(s[3] for s in hb.digit_growth), "product": hb.product_ok, "power_bound": hb.power_bound_ok}
    if args.pairs:
        for mode in ("random", "one-digit"):
            e = holder_exponent_estimate(p, args.depth, args.pairs, args.seed, mode)
            est[mode] = {"pairs": e.pair_count, "skipped": e.skipped, "min": e.min_exponent,
                         "median": e.median_exponent, "max": e.max_exponent}
            checks[f"min_exponent_{mode}"] = e.min_exponent >= args.min_exponent
    rows = [{"j": j, "position": pos, "digit": d, "bound_log2": 2 * j + 5, "ok": ok}
            for j, pos, d, ok in hb.digit_growth]
    results = {"t": hb.t, "C": hb.C, "K_y": str(hb.K_y), "K_x": str(hb.K_x), "estimates": est}
    return results, rows, checks


def cmd_dimension(args, out):
    b = moran_bracket(args.m, args.M, args.depth, args.tol, args.budget, args.jobs)
    jb = jarnik_bounds(args.m, args.M)
    results = {"s_low": b.s_low, "s_high": b.s_high, "s_exact": b.s_exact, "depth": b.depth,
               "cylinders": b.cylinder_count, "jarnik": {"lower": jb.lower, "upper": jb.upper}}
    checks = {
        "bracket_ordered": b.s_low <= b.s_exact <= b.s_high,
        "jarnik_consistent": b.s_high >= jb.lower - args.slack and b.s_low <= jb.upper + args.slack,
    }
    return results, None, checks


def cmd_jarnik(args, out):
    jb = jarnik_bounds(args.m, args.M)
    return {"m": jb.m, "M": jb.M, "lower": jb.lower, "upper": jb.upper}, None, {}


def cmd_measure(args, out):
    rng = np.random.default_rng(args.seed)
    theta = 1 / math.sqrt(args.m)
    if args.a is not None and args.b is not None:
        intervals = [(args.a, args.b)]
    else:
        intervals = [tuple(sorted(rng.uniform(0, theta, 2))) for _ in range(args.intervals)]
    rows = []
    worst = 0.0
    for a, b in intervals:
        rep = invariance_report(float(a), float(b), args.cutoff, args.m)
        worst = max(worst, rep.defect)
        rows.append({"a": float(a), "b": float(b), "measure": rep.measure, "branch_sum": rep.branch_sum,
                     "tail": rep.tail, "defect": rep.defect, "truncated_defect": rep.truncated_defect})
    return {"intervals": len(rows), "worst_defect": worst}, rows, {"invariance": worst < args.tol}


def cmd_sample(args, out):
    x = sample_gamma(args.m, args.seed, args.count)
    d = first_digits(x, args.m)
    rows = []
    ok = True
    for j in range(args.m, args.m + args.digits):
        p = digit_law(j, args.m)
        freq = float(np.mean(d == j))
        sigma = math.sqrt(p * (1 - p) / args.count)
        within = abs(freq - p) <= 3 * sigma
        ok &= within
        rows.append({"digit": j, "law": p, "frequency": freq, "sigma": sigma, "within_3sigma": within})
    results = {"count": args.count, "head": [repr(float(v)) for v in x[:5]]}
    return results, rows, {"digit_frequencies": ok}


# ---------------------------------------------------------------------------
# argument parsing


def _add_construction(p):
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--alpha", required=True, help="rational, e.g. 4 or 1/2")
    p.add_argument("--gamma", default="3/4", help="sparse exponent in (0,1), e.g. 3/4 or 0.25")
    p.add_argument("--base", default="const:2", help="const:c | periodic:a,b,.. | random:seed,lo,hi")
    p.add_argument("--N0", type=int, default=None, help="force N0 (flagged unverified)")
    p.add_argument("--scan", type=int, default=1000, help="scan limit for the N0 search")
    p.add_argument("--depth", type=int, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thetaexp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", default=None, help="output file (default stdout)")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", parents=[common], help="digits of an exact field element")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--decimals", type=int, default=20)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("orbit", parents=[common], help="running S, L, R along an orbit")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--x", default=None, help="exact expression; default: one sample from the measure")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--decimals", type=int, default=20)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("construct", parents=[common], help="synthesize a word and its ratio series")
    _add_construction(p)
    p.add_argument("--checkpoints", default="auto")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("ratio", parents=[common], help="ratio series of a digit word")
    p.add_argument("--m", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--digits")
    g.add_argument("--random", help="M,depth,seed: uniform bounded digits")
    p.add_argument("--checkpoints", default="auto")
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("conditions", parents=[common], help="conditions (A)-(C) and N0 search")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--gamma", default="3/4")
    p.add_argument("--scan", type=int, default=1000)
    p.add_argument("--diagnostics", default=None, help="comma-separated k values")
    p.set_defaults(func=cmd_conditions)

    p = sub.add_parser("verify-metric", parents=[common], help="exact cylinder metric bounds")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--digits", default=None)
    p.add_argument("--words", type=int, default=1000)
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--max-digit", type=int, default=50)
    p.set_defaults(func=cmd_verify_metric)

    p = sub.add_parser("verify-monotone", parents=[common], help="inserted-digit monotonicity")
    _add_construction(p)
    p.set_defaults(func=cmd_verify_monotone)

    p = sub.add_parser("verify-holder", parents=[common], help="seed-map growth bounds and exponents")
    _add_construction(p)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--min-exponent", type=float, default=0.8)
    p.set_defaults(func=cmd_verify_holder)

    p = sub.add_parser("dimension", parents=[common], help="Moran bracket and Jarnik bounds")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--budget", type=int, default=10**8)
    p.add_argument("--slack", type=float, default=0.05)
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("jarnik", parents=[common], help="Jarnik-type dimension bounds")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.set_defaults(func=cmd_jarnik)

    p = sub.add_parser("measure", parents=[common], help="invariance of the Gauss measure")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--intervals", type=int, default=100)
    p.add_argument("--cutoff", type=int, default=10**5)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("sample", parents=[common], help="sample the measure; first-digit law")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--count", type=int, default=10**6)
    p.add_argument("--digits", type=int, default=6)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        results, rows, checks = args.func(args, None)
    except FloorAmbiguityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    buf = io.StringIO()
    status = _emit(args, results, rows, checks, buf)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return status


if __name__ == "__main__":
    sys.exit(main())
