"""Command-line entry point ``cfdim``.

Every run prints one JSON document on standard output. Warnings go to
standard error and are also collected in the document's ``warnings`` list.
Exit codes: 0 success, 2 usage error, 3 numerical failure (non-convergence,
bracket or monotonicity failure, budget refusal).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
import warnings
from typing import Optional, Sequence

from . import __version__
from .boxcount import DegenerateScalesError, box_count_dimension, scaling_region
from .cantor import ConstructionError, Construction, build_schedule, gamma_ladder, generate_points, read_points_csv, write_points_csv
from .cf import DomainError
from .dimension import BracketError, MonotonicityError, closed_form_oracle, solve_limit, solve_pressure_root
from .growth import g_closed_form, g_recursive
from .potential import make_potential
from .pressure import DEFAULT_BUDGET, Alphabet, BudgetExceeded, NotConverged, enumeration_cost, pressure_brute, pressure_spectral

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _pos_float(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return v


def _int_list(text):
    try:
        vals = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text):
    try:
        vals = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _alphabet(text):
    try:
        Alphabet.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return text


def _m_rule(text):
    """``Kj`` (linear rule ``m_j = K j``) or explicit ``m_1,m_2,...``."""
    t = str(text).strip()
    if t.endswith("j"):
        k = t[:-1] or "1"
        if not k.isdigit() or int(k) < 1:
            raise argparse.ArgumentTypeError(f"bad m rule {text!r}")
        return t
    _int_list(t)
    return t


def _m_values(rule: str, J: int):
    if rule.endswith("j"):
        k = int(rule[:-1] or "1")
        return [k * j for j in range(1, J + 1)]
    return [int(v) for v in rule.split(",")]


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _globals(p, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="FILE", default=d, help="JSON document with option values; flags win")
    p.add_argument("--threads", type=_pos_int, default=argparse.SUPPRESS if suppress else 1, help="worker cap")
    p.add_argument("--deterministic", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="serial, bit-reproducible evaluation")
    p.add_argument("--json-indent", type=_nonneg_int, default=argparse.SUPPRESS if suppress else 2)
    p.add_argument("--force", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="lift the enumeration budget")


def _potential_args(p):
    p.add_argument("--r", type=_pos_int, default=1)
    p.add_argument("--tau", default="const:0.5", help="tau descriptor, e.g. const:0.5 or expr:...")
    p.add_argument("--h", default="logT", help="h descriptor: logT, logB:B, const:c or expr:...")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfdim", description="Dimension computations for continued-fraction limsup sets.")
    parser.add_argument("--version", action="version", version=f"cfdim {__version__}")
    _globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gr", help="the exponent g_r(s)")
    p.add_argument("--r", type=_pos_int, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--method", choices=("recursive", "closed", "both"), default="both")

    p = sub.add_parser("pressure", help="pressure of psi_s on an alphabet")
    p.add_argument("--alphabet", type=_alphabet, required=True)
    _potential_args(p)
    p.add_argument("--s", type=_nonneg_float, required=True)
    p.add_argument("--method", choices=("brute", "spectral", "both"), default="spectral")
    p.add_argument("--n", type=_pos_int, default=16, help="brute-force depth")
    p.add_argument("--grid", type=_pos_int, default=64, help="spectral grid size K")

    p = sub.add_parser("dimension", help="dimension along B = {1..M}")
    _potential_args(p)
    p.add_argument("--M-list", dest="M_list", type=_int_list, default=[20, 50, 100, 200])
    p.add_argument("--method", choices=("fn", "pressure", "both"), default="pressure")
    p.add_argument("--n", type=_pos_int, default=12, help="depth for the fn method")
    p.add_argument("--grid", type=_pos_int, default=64)
    p.add_argument("--tol", type=_pos_float, default=None)
    p.add_argument("--oracle", action="store_true", default=False)
    p.add_argument("--csv", metavar="PATH", default=None)

    p = sub.add_parser("sample", help="seeded points of the Cantor construction")
    _potential_args(p)
    p.add_argument("--M", type=_pos_int, default=20)
    p.add_argument("--depth", type=_pos_int, default=4, help="number of levels J")
    p.add_argument("--count", type=_pos_int, default=1000)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--t0", type=_nonneg_int, default=1)
    p.add_argument("--m-rule", dest="m_rule", type=_m_rule, default="4j", help="Kj or m_1,...,m_J")
    p.add_argument("--ladder-s", dest="ladder_s", type=float, default=None,
                   help="ladder exponent for r >= 2 (default: pressure root at M minus 3 eps)")
    p.add_argument("--eps", type=_pos_float, default=0.01)
    p.add_argument("--emit", metavar="PATH", default=None)

    p = sub.add_parser("boxdim", help="box-counting slope of a points CSV")
    p.add_argument("--points", required=True, metavar="PATH")
    p.add_argument("--scales", type=_float_list, default=None)

    for name, sp in sub.choices.items():
        _globals(sp, suppress=True)
    return parser


# ---------------------------------------------------------------------------
# configuration merge
# ---------------------------------------------------------------------------


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def _config_tokens(sp: argparse.ArgumentParser, doc: dict) -> list:
    by_dest = {a.dest: a for a in sp._actions if a.option_strings and a.dest != "help"}
    unknown = sorted(k for k in doc if k.replace("-", "_") not in by_dest or k.replace("-", "_") == "config")
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    tokens = []
    for key, value in doc.items():
        action = by_dest[key.replace("-", "_")]
        flag = action.option_strings[-1]
        if value is None:
            continue
        if action.nargs == 0:
            if value is True:
                tokens.append(flag)
            elif value is not False:
                raise UsageError(f"config key {key} must be true or false")
            continue
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        tokens.extend([flag, str(value)])
    return tokens


def _command_index(argv: Sequence[str], commands) -> int:
    takes_value = {"--config", "--threads", "--json-indent"}
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in commands:
            return i
        i += 2 if tok in takes_value else 1
    return -1


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    """Parse ``argv`` after merging an optional ``--config`` document (flags win)."""
    parser = build_parser()
    argv = list(argv)
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        with open(known.config) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}")
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    doc = dict(doc)
    commands = set(COMMANDS)
    idx = _command_index(argv, commands)
    if idx < 0:
        parser.parse_args(argv)  # reports the missing subcommand
    command = argv[idx]
    cmd = doc.pop("command", command)
    if cmd != command:
        raise UsageError(f"config is for {cmd!r}, not {command!r}")
    tokens = _config_tokens(_subparser(parser, command), doc)
    return parser.parse_args(argv[: idx + 1] + tokens + argv[idx + 1 :])


def config_echo(args: argparse.Namespace) -> dict:
    """Resolved options; feeding this back through ``--config`` repeats the run."""
    return {k: v for k, v in sorted(vars(args).items()) if k != "config"}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _budget(args):
    return 10**18 if args.force else DEFAULT_BUDGET


def _jobs(args):
    return 1 if args.deterministic else args.threads


def _potential(args):
    try:
        return make_potential(args.r, args.tau, args.h)
    except (ValueError, SyntaxError) as exc:
        raise UsageError(f"bad potential: {exc}")


def cmd_gr(args, warn):
    if not 0 < args.s <= 1:
        raise UsageError("--s must lie in (0, 1]")
    out = {}
    if args.method in ("recursive", "both"):
        out["recursive"] = float(g_recursive(args.r, args.s))
    if args.method in ("closed", "both"):
        out["closed"] = float(g_closed_form(args.r, args.s))
    if args.method == "both":
        out["diff"] = abs(out["recursive"] - out["closed"])
    return out


def cmd_pressure(args, warn):
    pspec = _potential(args)
    B = Alphabet.parse(args.alphabet)
    res = {}
    if args.method in ("brute", "both"):
        n_list = [n for n in (args.n - 2, args.n - 1, args.n) if n >= 1]
        cost = enumeration_cost(B, args.n, "direct")
        if cost > _budget(args) and pspec.separable is None:
            raise BudgetExceeded(cost, _budget(args))
        est = pressure_brute(pspec, args.s, B, n_list, budget=_budget(args), n_jobs=_jobs(args))
        if est.params["n"] != args.n:
            raise BudgetExceeded(cost, _budget(args))
        res["brute"] = est.as_dict()
    if args.method in ("spectral", "both"):
        est = pressure_spectral(pspec, args.s, B, args.grid)
        if est.method != "spectral":
            warn(f"Chebyshev iterate went negative; used piecewise-linear grid of {est.params['grid']} points")
        if not est.converged:
            raise NotConverged(f"power iteration residual {est.residual:.3g}")
        res["spectral"] = est.as_dict()
    if args.method == "both":
        out = dict(res["spectral"])
        out["method"] = "both"
        out["brute"] = res["brute"]
        out["spectral"] = res["spectral"]
        out["diff"] = abs(res["brute"]["value"] - res["spectral"]["value"])
        return out
    return next(iter(res.values()))


def _oracle(pspec):
    if pspec.h.kind == "logT" and pspec.tau.constant_value is not None:
        return closed_form_oracle(pspec.r, pspec.tau.constant_value)
    return None


def _sweep_csv(path, seq):
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["M", "s_M", "bracket_lo", "bracket_hi"])
        for M, s, lo, hi in seq:
            wr.writerow([M, repr(s), repr(lo), repr(hi)])


def cmd_dimension(args, warn):
    pspec = _potential(args)
    Ms = args.M_list
    if any(b <= a for a, b in zip(Ms, Ms[1:])) or Ms[0] < 1:
        raise UsageError("--M-list must be positive and increasing")
    methods = ["pressure", "fn"] if args.method == "both" else [args.method]
    results = {}
    for m in methods:
        results[m] = solve_limit(
            pspec, Ms, method=m, n=args.n, K=args.grid, tol=args.tol, n_jobs=_jobs(args), budget=_budget(args)
        )
    main = results[methods[0]]
    out = main.as_dict()
    out["lower_bound"] = True
    if main.extrapolation is not None:
        warn("extrapolation s_inf - C/M is a heuristic fit, not a bound")
    if main.degenerate:
        warn("degenerate root: objective nonpositive at s = 0")
    if args.method == "both":
        out["fn"] = results["fn"].as_dict()
        out["fn_pressure_gap"] = abs(results["fn"].s_star - main.s_star)
    if args.oracle:
        o = _oracle(pspec)
        if o is None:
            warn("no closed form for this potential; oracle needs h = logT and constant tau")
        out["oracle"] = o
    if args.csv:
        _sweep_csv(args.csv, main.M_sequence)
        out["csv"] = args.csv
    return out


def cmd_sample(args, warn):
    pspec = _potential(args)
    try:
        schedule = build_schedule(args.r, args.t0, _m_values(args.m_rule, args.depth), args.depth, args.M)
    except ValueError as exc:
        raise UsageError(str(exc))
    s = args.ladder_s
    ladder = None
    if args.r >= 2:
        if s is None:
            s = solve_pressure_root(pspec, args.M).s_star - 3 * args.eps
        try:
            ladder = gamma_ladder(args.r, s)
        except DomainError as exc:
            raise UsageError(f"ladder exponent: {exc}")
    construction = Construction(schedule, ladder, pspec)
    points = generate_points(construction, args.count, args.seed)
    widened = sum(p.widened for p in points)
    if widened:
        warn(f"widened {widened} empty digit windows")
    values = [float(p.value) for p in points]
    out = {
        "count": len(points),
        "seed": args.seed,
        "depth": args.depth,
        "word_length": schedule.length,
        "ladder_s": s,
        "schedule": {"n": list(schedule.n), "t": list(schedule.t[1:]), "m": list(schedule.m[1:])},
        "widened_windows": widened,
        "min": min(values),
        "max": max(values),
    }
    if ladder is not None:
        out["telescoping_residual"] = ladder.telescoping_residual()
    if args.emit:
        write_points_csv(args.emit, points)
        out["emit"] = args.emit
    else:
        out["points"] = [
            {"seed": p.seed, "numerator": p.value.numerator, "denominator": p.value.denominator, "float64_value": v}
            for p, v in zip(points, values)
        ]
    return out


def cmd_boxdim(args, warn):
    try:
        pts = read_points_csv(args.points, exact=True)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read points: {exc}")
    scales = args.scales
    auto = scales is None
    try:
        if auto:
            scales = scaling_region(pts)
            warn("scales chosen automatically from the sample's scaling region")
        res = box_count_dimension(pts, scales)
    except (DegenerateScalesError, ValueError) as exc:
        raise UsageError(str(exc))
    out = res.as_dict()
    out["auto_scales"] = auto
    return out


COMMANDS = {
    "gr": cmd_gr,
    "pressure": cmd_pressure,
    "dimension": cmd_dimension,
    "sample": cmd_sample,
    "boxdim": cmd_boxdim,
}


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


class _Collector(logging.Handler):
    def __init__(self, warn):
        super().__init__(logging.WARNING)
        self.warn = warn

    def emit(self, record):
        self.warn(record.getMessage())


def _write(doc, indent, stream):
    stream.write(json.dumps(doc, indent=indent or None, default=float) + "\n")
    stream.flush()


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    """Execute one command; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    collected: list = []

    def warn(msg):
        collected.append(msg)
        stderr.write(f"warning: {msg}\n")

    indent = 2
    t0 = time.perf_counter()
    record = {"version": __version__, "status": "ok"}
    handler = _Collector(warn)
    log = logging.getLogger("cfdim")
    log.addHandler(handler)
    try:
        try:
            args = parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        indent = args.json_indent
        record["command"] = args.command
        record["config"] = config_echo(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = COMMANDS[args.command](args, warn)
        for w in caught:
            warn(str(w.message))
        record.update(result)
        code = EXIT_OK
    except UsageError as exc:
        record.update(status="error", error={"code": EXIT_USAGE, "reason": "usage", "message": str(exc)})
        code = EXIT_USAGE
    except BudgetExceeded as exc:
        record.update(status="error", error={"code": EXIT_NUMERIC, "reason": "budget", "message": str(exc)})
        code = EXIT_NUMERIC
    except (NotConverged, BracketError, MonotonicityError, ConstructionError, NumericFailure) as exc:
        record.update(status="error", error={"code": EXIT_NUMERIC, "reason": "non-convergence", "message": str(exc)})
        code = EXIT_NUMERIC
    finally:
        log.removeHandler(handler)
    record["warnings"] = list(dict.fromkeys(collected))
    record["wall_time"] = time.perf_counter() - t0
    if code != EXIT_OK:
        stderr.write(f"error: {record['error']['message']}\n")
    _write(record, indent, stdout)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
