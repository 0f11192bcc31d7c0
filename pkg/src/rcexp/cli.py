"""Command-line front end.

    rcexp exponent FILE --quantity Q --rate R [--threshold D]
    rcexp sweep FILE --quantity Q --rates a:b:step --thresholds a:b:step [--jobs N]
    rcexp verify [FILE] [--suite S] [--seed S]
    rcexp simulate FILE --decoder simplified|optimum --n N --rate R --trials T --seed S

CSV goes to standard output, diagnostics to standard error.  Exit codes:
0 success, 1 verification failure, 2 bad input, 3 instance too large.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import channel as ch
from . import finite_n as fn
from . import source as src
from .core import DistortionSpec, ProblemError, ScaleError, SourceProblem, parse_rational
from .rate import rate, rate_max

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_SCALE = 0, 1, 2, 3
JOBS_ENV = "RCEXP_JOBS"


class InputError(ValueError):
    """Malformed problem file or flag; the message names the field."""


# -- problem files --------------------------------------------------------------

def _number(v, field):
    try:
        if isinstance(v, str):
            return Fraction(v.strip())
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise TypeError
        return v
    except (ValueError, TypeError, ZeroDivisionError):
        raise InputError(f"field '{field}': {v!r} is not a number or 'num/den' string") from None


def _vector(doc, field):
    if field not in doc:
        raise InputError(f"field '{field}' is missing")
    v = doc[field]
    if not isinstance(v, list) or not v:
        raise InputError(f"field '{field}': expected a nonempty list")
    return [_number(x, f"{field}[{i}]") for i, x in enumerate(v)]


def _matrix(doc, field):
    if field not in doc:
        raise InputError(f"field '{field}' is missing")
    m = doc[field]
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        raise InputError(f"field '{field}': expected a list of rows")
    rows = [[_number(x, f"{field}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(m)]
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"field '{field}': rows have different lengths")
    return rows


def _floats(v):
    return np.array(v, dtype=float) if not isinstance(v[0], list) else np.array([[float(x) for x in r] for r in v])


def _check_stochastic(vec, field):
    arr = np.array([float(x) for x in vec])
    if np.any(arr < 0):
        raise InputError(f"field '{field}': negative probability")
    # rationals must sum to exactly 1, floats to within rounding
    if all(isinstance(x, Fraction) for x in vec):
        if sum(vec) != 1:
            raise InputError(f"field '{field}': probabilities sum to {sum(vec)}, not 1")
    elif abs(arr.sum() - 1.0) > 1e-9:
        raise InputError(f"field '{field}': probabilities sum to {arr.sum():.12g}, not 1")
    return arr / arr.sum()


def parse_problem(doc):
    """JSON document -> SourceProblem or ChannelProblem (raises InputError)."""
    if not isinstance(doc, dict):
        raise InputError("problem file must hold a JSON object")
    kind = doc.get("kind")
    if kind not in ("source", "channel"):
        raise InputError(f"field 'kind': expected 'source' or 'channel', got {kind!r}")
    D = _number(doc.get("D", 0), "D")
    Q = _check_stochastic(_vector(doc, "Q"), "Q")
    try:
        if kind == "source":
            P = _check_stochastic(_vector(doc, "P"), "P")
            rows = _matrix(doc, "distortion")
            if any(isinstance(x, Fraction) for r in rows for x in r):
                d = DistortionSpec.from_rationals([[parse_rational(x) for x in r] for r in rows])
            else:
                d = DistortionSpec(np.array(rows, dtype=float))
            exact = D if isinstance(D, Fraction) else None
            return SourceProblem(P, Q, d, float(D), exact)
        rows = _matrix(doc, "channel")
        W = np.array([_check_stochastic(r, f"channel[{i}]") for i, r in enumerate(rows)])
        return ch.ChannelProblem(Q, W, float(D))
    except ProblemError as e:
        raise InputError(f"invalid problem: {e}") from None


def load_problem(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read problem file: {e}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"problem file is not valid JSON: {e}") from None
    return parse_problem(doc), doc


def parse_grid(text, field):
    """'a:b:step' (inclusive) or a single number -> ascending array."""
    try:
        parts = [float(Fraction(p)) for p in str(text).split(":")]
    except (ValueError, ZeroDivisionError):
        raise InputError(f"field '{field}': cannot parse grid {text!r}") from None
    if len(parts) == 1:
        return np.array(parts)
    if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
        raise InputError(f"field '{field}': expected a:b:step with a <= b and step > 0")
    a, b, step = parts
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(count)


# -- quantities -----------------------------------------------------------------

def _src_rate(pb, R):
    return rate(pb.P, pb.Q, pb.d, pb.D).rate


def _src_rate_max(pb, R):
    return rate_max(pb.Q, pb.d, pb.D)


def _composite(fn_):
    return lambda cp, R: fn_(ch.compile_channel(cp).composite, R)


SOURCE_QUANTITIES = {
    "es": (src.es_explicit, "explicit"),
    "ef": (src.ef_implicit, "implicit"),
    "ef_lce": (src.ef_explicit_lce, "explicit"),
    "rate": (_src_rate, "dual"),
    "rate_max": (_src_rate_max, "vertex"),
}

CHANNEL_QUANTITIES = {
    "ee": (ch.ee, "explicit"),
    "ec_star": (ch.ec_star_implicit, "implicit"),
    "ec_star_lce": (ch.ec_star_lce, "explicit"),
    "ml_correct": (ch.ml_correct_exponent, "explicit"),
    "dueck_korner": (ch.dueck_korner_bound, "implicit"),
    "forney_ee": (ch.forney_ee, "explicit"),
    "forney_exact": (ch.forney_exact, "explicit"),
    "forney_bound": (ch.forney_bound, "explicit"),
    "gallager": (ch.gallager_er, "explicit"),
    "mutual_info": (lambda cp, R: ch.mutual_information(cp), "closed_form"),
    "dmin_q": (lambda cp, R: ch.dmin_q(cp), "closed_form"),
    "rate": (_composite(_src_rate), "dual"),
    "rate_max": (_composite(_src_rate_max), "vertex"),
}

QUANTITIES = sorted(set(SOURCE_QUANTITIES) | set(CHANNEL_QUANTITIES))


def _lookup(problem, quantity):
    table = SOURCE_QUANTITIES if isinstance(problem, SourceProblem) else CHANNEL_QUANTITIES
    kind = "source" if table is SOURCE_QUANTITIES else "channel"
    if quantity not in table:
        raise InputError(f"field 'quantity': {quantity!r} is not defined for {kind} problems")
    return table[quantity]


def evaluate(problem, quantity, R, D=None):
    """(value, method tag, wall seconds) of one quantity at (R, D)."""
    func, tag = _lookup(problem, quantity)
    if R < 0:
        raise InputError("field 'rate': must be nonnegative")
    pb = problem if D is None else problem.with_threshold(D)
    t0 = time.perf_counter()
    value = float(func(pb, float(R)))
    return value, tag, time.perf_counter() - t0


def fmt(x) -> str:
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return "%.9g" % x


HEADER = ["quantity", "R", "D", "value", "method"]


def _row(quantity, R, D, value, tag, wall, timing):
    row = [quantity, fmt(R), fmt(D), fmt(value), tag]
    if timing:
        row.append("%.6f" % wall)
    return row


def _writer(out):
    return csv.writer(out, lineterminator="\n")


# -- commands -------------------------------------------------------------------

def cmd_exponent(args, out):
    problem, _ = load_problem(args.file)
    D = problem.D if args.threshold is None else float(Fraction(args.threshold))
    value, tag, wall = evaluate(problem, args.quantity, args.rate, D)
    w = _writer(out)
    w.writerow(HEADER + (["wall_time"] if args.timing else []))
    w.writerow(_row(args.quantity, args.rate, D, value, tag, wall, args.timing))
    return EXIT_OK


def _sweep_point(task):
    doc, quantity, R, D = task
    return evaluate(parse_problem(doc), quantity, R, D)


def default_jobs():
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"environment variable {JOBS_ENV}: {env!r} is not an integer") from None
    return os.cpu_count() or 1


def cmd_sweep(args, out):
    problem, doc = load_problem(args.file)
    _lookup(problem, args.quantity)
    rates = parse_grid(args.rates if args.rates is not None else doc.get("rates", "0"), "rates")
    thresholds = (parse_grid(args.thresholds, "thresholds") if args.thresholds is not None
                  else parse_grid(doc["thresholds"], "thresholds") if "thresholds" in doc
                  else np.array([problem.D]))
    tasks = [(doc, args.quantity, float(R), float(D)) for D in thresholds for R in rates]
    jobs = args.jobs if args.jobs is not None else default_jobs()
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    w = _writer(out)
    w.writerow(HEADER + (["wall_time"] if args.timing else []))
    for (_, q, R, D), (value, tag, wall) in zip(tasks, results):
        w.writerow(_row(q, R, D, value, tag, wall, args.timing))
    return EXIT_OK


def cmd_verify(args, out):
    from .verification import run_suite

    problem = load_problem(args.file)[0] if args.file else None
    checks = run_suite(args.suite, args.seed, problem)
    for c in checks:
        print(c.line(), file=out)
    if not checks:
        print(f"suite {args.suite!r} has no checks for this problem kind", file=sys.stderr)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


SIM_HEADER = ["decoder", "n", "R", "D", "M", "trials", "errors", "estimate", "ci_low", "ci_high", "exact",
              "neg_log_over_n", "rng"]


def cmd_simulate(args, out):
    problem, _ = load_problem(args.file)
    if not isinstance(problem, ch.ChannelProblem):
        raise InputError("field 'kind': simulate needs a channel problem")
    if args.trials < 1000:
        raise InputError("field 'trials': at least 1000 trials are required")
    spec = fn.CodebookSpec.channel(args.n, args.rate)
    decoder = "optimum" if args.decoder in ("optimum", "optimum_tradeoff") else "simplified"
    mc = fn.mc_simulate(problem, spec, decoder, args.trials, args.seed)
    lo, hi = fn.wilson_interval(mc.errors, mc.trials)
    exact = ""
    if decoder == "simplified":
        try:
            exact = fmt(fn.exact_channel_error_prob(problem, spec).value)
        except ScaleError as e:
            print(f"exact column skipped: {e}", file=sys.stderr)
    w = _writer(out)
    w.writerow(SIM_HEADER)
    w.writerow([decoder, args.n, fmt(args.rate), fmt(problem.D), spec.M, mc.trials, mc.errors, fmt(mc.value),
                fmt(lo), fmt(hi), exact, fmt(-mc.log_value / args.n), mc.rng])
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="rcexp", description="Random-coding exponents for source and channel coding.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("exponent", help="evaluate one quantity")
    e.add_argument("file")
    e.add_argument("--quantity", required=True, choices=QUANTITIES)
    e.add_argument("--rate", type=float, default=0.0)
    e.add_argument("--threshold", default=None, help="override D (float or num/den)")
    e.add_argument("--timing", action="store_true", help="append a wall_time column")
    e.set_defaults(func=cmd_exponent)

    s = sub.add_parser("sweep", help="Cartesian sweep over rates and thresholds")
    s.add_argument("file")
    s.add_argument("--quantity", required=True, choices=QUANTITIES)
    s.add_argument("--rates", default=None, help="a:b:step")
    s.add_argument("--thresholds", default=None, help="a:b:step")
    s.add_argument("--jobs", type=int, default=None, help=f"worker processes (default ${JOBS_ENV} or CPU count)")
    s.add_argument("--timing", action="store_true")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run self-check suites")
    v.add_argument("file", nargs="?")
    v.add_argument("--suite", default="all", choices=["duality", "thm1", "thm3", "lemma1", "ml_chain", "finite_n",
                                                      "all"])
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("simulate", help="Monte Carlo decoding simulation")
    m.add_argument("file")
    m.add_argument("--decoder", choices=["simplified", "optimum", "optimum_tradeoff"], default="simplified")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--rate", type=float, required=True)
    m.add_argument("--trials", type=int, default=10**4)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PARSE if e.code else EXIT_OK
    try:
        return args.func(args, out)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ScaleError as e:
        print(f"scale exceeded: {e}", file=sys.stderr)
        return EXIT_SCALE
    except ProblemError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
