"""Command-line front end: ``cflab <command> [flags]``.

Exit status: 0 on success, 2 when an input violates a precondition, 3 when a
computation exhausts its budget, precision or iteration limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import cf_core, dim_formulas, level_sets, montecarlo, pressure, quotient_stats
from .errors import CFLabError, PreconditionError
from .growth_fn import parse as parse_fn

FORMATS = ("json", "csv")


# ---------------------------------------------------------------- output

def _num(x):
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(format(x, ".12g"))
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if hasattr(x, "item"):          # numpy scalars
        return _num(x.item())
    return x


def _cell(x):
    if isinstance(x, float):
        return _num(x) if not math.isfinite(x) else format(x, ".12g")
    return "" if x is None else x


def render(payload, fmt) -> str:
    """JSON (sorted keys) or CSV text for a dict payload or a table."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if isinstance(payload, dict) and "columns" in payload and "rows" in payload:
            w.writerow(payload["columns"])
            for row in payload["rows"]:
                w.writerow([_cell(v) for v in row])
        else:
            w.writerow(["key", "value"])
            for k, v in sorted(payload.items()):
                w.writerow([k, json.dumps(_num(v)) if isinstance(v, (dict, list, tuple)) else _cell(v)])
        return buf.getvalue()
    if isinstance(payload, dict) and "columns" in payload and "rows" in payload:
        payload = {"columns": payload["columns"], "rows": [list(r) for r in payload["rows"]]}
    return json.dumps(_num(payload), sort_keys=True) + "\n"


# ---------------------------------------------------------------- inputs

def _bindings(items):
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise PreconditionError(f"--let expects NAME=VALUE, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise PreconditionError(f"--let value for {name!r} is not a number") from None
    return out


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise PreconditionError(f"not a rational number: {text!r}") from None


def _quotients(args):
    """Quotients from --quotients, --file, --rational or a seeded random point."""
    if getattr(args, "quotients", None):
        try:
            qs = tuple(int(v) for v in args.quotients.replace(" ", "").split(",") if v)
        except ValueError:
            raise PreconditionError("--quotients expects comma-separated integers") from None
        return cf_core.QuotientSequence(qs, cf_core.Source("generated", {"construction": "literal"}))
    if getattr(args, "file", None):
        text = Path(args.file).read_text()
        data = json.loads(text)
        if isinstance(data, list):
            return cf_core.QuotientSequence(tuple(data), cf_core.Source("generated", {"construction": "literal"}))
        return cf_core.QuotientSequence.from_dict(data)
    if getattr(args, "rational", None):
        x = _fraction(args.rational)
        return cf_core.expand_rational(x.numerator, x.denominator)
    need = getattr(args, "N", None)
    terms = getattr(args, "terms", None) or ((need + 1) if need else None)
    if not terms:
        raise PreconditionError("give --quotients, --file, --rational or --terms for a random point")
    return montecarlo.random_point(args.seed, terms, args.precision_bits)


# ---------------------------------------------------------------- commands

def cmd_expand(args):
    if args.rational:
        x = _fraction(args.rational)
        seq = cf_core.expand_rational(x.numerator, x.denominator)
    elif args.interval:
        lo, hi = (_fraction(v) for v in args.interval)
        seq = cf_core.expand_real(lo, hi, args.terms or 10**6)
    else:
        if not args.terms:
            raise PreconditionError("expand needs --rational, --interval or --terms")
        seq = montecarlo.random_point(args.seed, args.terms, args.precision_bits)
    if args.out == "csv":
        return {"columns": ["index", "a"], "rows": [(i, a) for i, a in enumerate(seq, 1)]}
    return seq.to_dict()


def cmd_stats(args):
    seq = _quotients(args)
    phi = parse_fn(args.phi, args.bindings) if args.phi else None
    rows = quotient_stats.stats_rows(seq, args.N, phi)
    return {"columns": ["n", "L_n", "S_n", "argmax", "ratio"], "rows": rows}


def cmd_pressure(args):
    if args.method == "cyl":
        est = pressure.pressure_cylinder(args.theta, args.depth, args.alphabet, q_cut=args.q_cut,
                                         tail=not args.no_tail, budget=args.budget,
                                         workers=args.workers)
    else:
        est = pressure.pressure_operator(args.theta, args.alphabet, args.grid, args.iters,
                                         tail=not args.no_tail)
    return est.to_dict()


def cmd_theta(args):
    return pressure.solve_theta(args.c, args.tol, workers=args.workers).to_dict()


def cmd_dim(args):
    return dim_formulas.dispatch(args.phi, args.bindings, workers=args.workers).to_dict()


def cmd_formula(args):
    b = args.bindings
    if args.which == "liao-rams":
        est = dim_formulas.liao_rams(args.s, args.t, args.N, b)
    elif args.which == "falconer":
        est = dim_formulas.falconer_lower(args.m, args.gap, args.N, b)
    else:
        est = dim_formulas.covering_upper(args.counts, args.diameters, args.N, b)
    return {"formula": args.which, "value": est.value, "window": list(est.window)}


def cmd_generate(args):
    if args.kind in ("e-sparse", "b-full", "d-rec") and not args.phi:
        raise PreconditionError(f"--kind {args.kind} needs --phi")
    if args.kind == "d-rec":
        res = level_sets.gen_d_recursion(args.phi, args.terms, args.bindings)
        payload = res.sequence.to_dict()
        payload["d_trace"] = list(res.d_trace)
        payload["start_index"] = res.start_index
    else:
        seq = level_sets.generate(args.kind, args.terms, args.phi, alpha=args.alpha, c=args.c,
                                  bindings=args.bindings)
        payload = seq.to_dict()
    return payload


def cmd_montecarlo(args):
    kw = dict(workers=args.workers, iid=args.iid)
    if args.which == "digit-freq":
        rows = montecarlo.digit_freq(args.samples, args.terms, args.seed, **kw)
        cols = ["k", "count", "total", "frequency", "mass", "sigma", "within_3sigma"]
        return {"columns": cols, "rows": [[getattr(r, c) for c in cols] for r in rows]}
    fn = montecarlo.sll_trend if args.which == "sll" else montecarlo.liminf_L_trend
    summary = fn(args.samples, args.n, args.seed, precision_bits=args.precision_bits, **kw)
    return summary.to_dict(include_values=args.values)


def cmd_dirichlet(args):
    seq = _quotients(args)
    psi = parse_fn(args.psi, args.bindings)
    rep = quotient_stats.dirichlet_report(seq, psi, args.N, args.outer)
    return {"indices": list(rep.indices), "borderline": list(rep.borderline), "outer": rep.outer}


# ---------------------------------------------------------------- parser

def _global_flags():
    g = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--precision-bits", type=int, default=None)
    g.add_argument("--out", default="json",
                   help="json or csv; for generate, any other value is a path for the JSON output")
    g.add_argument("--let", action="append", default=[], metavar="NAME=VALUE")
    g.add_argument("--config", default=None, help="JSON file of flag defaults")
    return g


def _quotient_source(p):
    p.add_argument("--quotients", help="comma-separated partial quotients")
    p.add_argument("--file", help="JSON quotient sequence (object or array)")
    p.add_argument("--rational", help="p/q in (0, 1)")
    p.add_argument("--terms", type=int, help="quotients of a seeded random point")


def build_parser():
    g = _global_flags()
    parser = argparse.ArgumentParser(prog="cflab", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", parents=[g], allow_abbrev=False, help="continued-fraction expansion")
    p.add_argument("--rational")
    p.add_argument("--interval", nargs=2, metavar=("LO", "HI"))
    p.add_argument("--terms", type=int)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("stats", parents=[g], allow_abbrev=False, help="L_n, S_n per n as CSV/JSON rows")
    _quotient_source(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--phi")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("pressure", parents=[g], allow_abbrev=False, help="estimate P(theta)")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--alphabet", type=int, default=100)
    p.add_argument("--method", choices=("cyl", "op"), default="cyl")
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--q-cut", type=int, default=pressure.DEFAULT_Q_CUT)
    p.add_argument("--budget", type=int, default=pressure.DEFAULT_BUDGET)
    p.add_argument("--no-tail", action="store_true", help="truncate the alphabet at --alphabet")
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("theta", parents=[g], allow_abbrev=False, help="solve P(theta) = c (theta - 1/2)")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--tol", type=float, default=5e-3)
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("dim", parents=[g], allow_abbrev=False, help="dimension of the level set of phi")
    p.add_argument("--phi", required=True)
    p.set_defaults(func=cmd_dim)

    p = sub.add_parser("formula", parents=[g], allow_abbrev=False, help="evaluate a dimension formula")
    p.add_argument("which", choices=("liao-rams", "falconer", "covering"))
    p.add_argument("--s")
    p.add_argument("--t")
    p.add_argument("--m")
    p.add_argument("--gap", "--theta", dest="gap")
    p.add_argument("--counts")
    p.add_argument("--diameters")
    p.add_argument("--N", "--K", dest="N", type=int, required=True)
    p.set_defaults(func=cmd_formula)

    p = sub.add_parser("generate", parents=[g], allow_abbrev=False, help="a point of a Cantor-type construction")
    p.add_argument("--kind", choices=level_sets.KINDS, required=True)
    p.add_argument("--phi")
    p.add_argument("--terms", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("montecarlo", parents=[g], allow_abbrev=False, help="a.e. trend checks on random points")
    p.add_argument("which", choices=("sll", "liminf-l", "digit-freq"))
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--n", type=int, default=10**4)
    p.add_argument("--terms", type=int, default=1000, help="quotients per sample for digit-freq")
    p.add_argument("--iid", action="store_true", help="approximate iid Gauss-Kuzmin quotients")
    p.add_argument("--values", action="store_true", help="include per-sample values")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("dirichlet", parents=[g], allow_abbrev=False, help="indices where a_n a_{n+1} beats the threshold")
    _quotient_source(p)
    p.add_argument("--psi", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--outer", action="store_true")
    p.set_defaults(func=cmd_dirichlet)
    return parser


def _apply_config(parser, argv):
    """Parse argv with defaults taken from --config; explicit flags still win."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    subparsers = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in subparsers), None)
    if not known.config or command is None:
        return parser.parse_args(argv)
    try:
        config = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PreconditionError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(config, dict):
        raise PreconditionError("config must be a JSON object")
    sub = subparsers[command]
    config = {k.replace("-", "_"): v for k, v in config.items() if k != "command"}
    unknown = sorted(set(config) - {a.dest for a in sub._actions})
    if unknown:
        raise PreconditionError(f"unknown config keys for {command}: {', '.join(unknown)}")
    for action in sub._actions:
        if action.dest in config:
            action.required = False
    sub.set_defaults(**config)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    # quotients and continuants can have up to DIGIT_CAP decimal digits
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        args.bindings = _bindings(args.let)
        if args.workers < 1:
            raise PreconditionError("--workers must be at least 1")
        payload = args.func(args)
        to_file = args.command == "generate" and args.out not in FORMATS
        fmt = "json" if to_file else args.out
        if fmt not in FORMATS:
            raise PreconditionError(f"--out must be json or csv, got {args.out!r}")
        text = render(payload, fmt)
        if to_file:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    except CFLabError as exc:
        print(f"cflab: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
