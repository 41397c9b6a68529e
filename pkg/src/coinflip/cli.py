"""Command-line front end.

Every subcommand prints CSV on stdout. Errors print one line on stderr and
exit 1; usage errors exit 2.
"""
from __future__ import annotations

import argparse
import csv
import sys
from collections.abc import Sequence

from . import exact
from .estimation import build_report, estimate_sex_distribution
from .inference import TestResult, combined_sequence_test, proportion_chi2_test, sequential_same_sex_tests
from .io import (
    TEST_HEADER,
    fmt,
    parse_counts,
    parse_policy,
    render_svg,
    write_raw_csv,
    write_sweep_csv,
)
from .model import CorrectionFactors, SexDistribution
from .simulation import SweepConfig, run_sweep

EVENTS = {"first3same": exact.first_k_same(3), "first2same": exact.first_k_same(2)}
GIVENS = {"ge3": exact.length_at_least(3), "eq3": exact.length_exactly(3)}


def _floats(n: int):
    def parse(text: str) -> tuple[float, ...]:
        try:
            values = tuple(float(x) for x in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}") from None
        if len(values) != n:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
        return values

    return parse


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _emit(rows: Sequence[Sequence[object]], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    for row in rows:
        w.writerow(row)


def _test_row(name: str, r: TestResult) -> list[str]:
    return [name, fmt(r.statistic), str(r.df), fmt(r.p_value), fmt(r.observed_prop), fmt(r.null_prop), str(r.n)]


def _load_counts(path: str):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_counts(fh)


# -- handlers -------------------------------------------------------------


def cmd_exact(args, out) -> None:
    sex = SexDistribution(args.pm)
    kind = args.kind
    if kind == "theorem1":
        value = exact.theorem1_probability(sex, CorrectionFactors(*args.cf))
    elif kind == "corollary1":
        value = exact.corollary1_probability(sex, args.ps, args.pd)
    elif kind == "theorem2":
        value = exact.theorem2_probability(sex, args.ps, args.pd)
    elif kind == "exactly3":
        value = exact.exactly_three_probability(sex, CorrectionFactors(*args.cf), args.third_m, args.third_f)
    else:
        dist = exact.enumerate_distribution(sex, parse_policy(args.policy))
        value = exact.event_probability(dist, EVENTS[args.event], GIVENS[args.given])
    _emit([[kind, fmt(value)]], out)


def cmd_estimate(args, out) -> None:
    report = build_report(_load_counts(args.counts))
    _emit([["key", "value"], *[[k, fmt(v)] for k, v in report.as_rows()]], out)


def cmd_test(args, out) -> None:
    rows = [TEST_HEADER]
    if args.kind == "proportion":
        rows.append(_test_row("proportion", proportion_chi2_test(args.x, args.n, args.p0)))
    else:
        counts = _load_counts(args.counts)
        sex = SexDistribution(args.pm) if args.pm is not None else estimate_sex_distribution(counts)
        if args.kind == "sequential":
            male, female = sequential_same_sex_tests(counts, sex)
            rows += [_test_row("sequential_male", male), _test_row("sequential_female", female)]
        else:
            rows.append(_test_row("combined", combined_sequence_test(counts, sex)))
    _emit(rows, out)


def cmd_sweep(args, out) -> None:
    config = SweepConfig(
        sex=SexDistribution(args.pm),
        p_D=args.pd,
        ratio_grid=SweepConfig.grid(args.ratio_min, args.ratio_max, args.grid),
        reps=args.reps,
        n_families=args.n,
        master_seed=args.seed,
    )
    summary = run_sweep(config, threads=args.threads, keep_raw=args.raw is not None)
    if summary.n_excluded:
        print(f"warning: {summary.n_excluded} empty datasets excluded", file=sys.stderr)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_sweep_csv(summary, fh)
    else:
        write_sweep_csv(summary, out)
    if args.raw:
        with open(args.raw, "w", encoding="utf-8", newline="") as fh:
            write_raw_csv(summary, fh)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_svg(summary, mark=args.mark))


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coinflip",
        description="Selection bias from family-stopping rules under a coin-toss model of sex at birth.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_exact = sub.add_parser("exact", help="closed forms and the enumeration oracle")
    exact_sub = p_exact.add_subparsers(dest="kind", required=True)
    t1 = exact_sub.add_parser("theorem1", help="P(MMM or FFF | N>=3) from correction factors")
    t1.add_argument("--pm", type=float, required=True)
    t1.add_argument("--cf", type=_floats(4), required=True, metavar="FM,FF,SM,SF")
    for name, helptext in (
        ("corollary1", "P(MMM or FFF | N>=3) from p_S and p_D"),
        ("theorem2", "P(MM? or FF? | N>=3) from p_S and p_D"),
    ):
        p = exact_sub.add_parser(name, help=helptext)
        p.add_argument("--pm", type=float, required=True)
        p.add_argument("--ps", type=float, required=True)
        p.add_argument("--pd", type=float, required=True)
    e3 = exact_sub.add_parser("exactly3", help="P(MMM or FFF | N=3)")
    e3.add_argument("--pm", type=float, required=True)
    e3.add_argument("--cf", type=_floats(4), required=True, metavar="FM,FF,SM,SF")
    e3.add_argument("--third-m", type=float, required=True)
    e3.add_argument("--third-f", type=float, required=True)
    orc = exact_sub.add_parser("oracle", help="conditional probability by exact enumeration")
    orc.add_argument("--pm", type=float, required=True)
    orc.add_argument("--policy", required=True, help="mp:q1,ps,pd,tail or a prefix,prob table file")
    orc.add_argument("--event", choices=sorted(EVENTS), required=True)
    orc.add_argument("--given", choices=sorted(GIVENS), required=True)
    p_exact.set_defaults(func=cmd_exact)

    p_est = sub.add_parser("estimate", help="estimate all quantities from a counts file")
    p_est.add_argument("--counts", required=True)
    p_est.set_defaults(func=cmd_estimate)

    p_test = sub.add_parser("test", help="chi-square tests")
    test_sub = p_test.add_subparsers(dest="kind", required=True)
    tp = test_sub.add_parser("proportion")
    tp.add_argument("--x", type=int, required=True)
    tp.add_argument("--n", type=int, required=True)
    tp.add_argument("--p0", type=float, required=True)
    for name in ("sequential", "combined"):
        t = test_sub.add_parser(name)
        t.add_argument("--counts", required=True)
        t.add_argument("--pm", type=float, default=None, help="null p_M (default: estimated from counts)")
    p_test.set_defaults(func=cmd_test)

    sw = sub.add_parser("sweep", help="Monte Carlo sweep over p_S/p_D")
    sw.add_argument("--pm", type=float, default=0.5164)
    sw.add_argument("--pd", type=float, default=0.354)
    sw.add_argument("--ratio-min", type=float, default=1.0)
    sw.add_argument("--ratio-max", type=float, default=1.5)
    sw.add_argument("--grid", type=int, default=100)
    sw.add_argument("--reps", type=int, default=1000)
    sw.add_argument("--n", type=int, default=58_007)
    sw.add_argument("--seed", type=_u64, required=True)
    sw.add_argument("--out")
    sw.add_argument("--svg")
    sw.add_argument("--raw")
    sw.add_argument("--mark", type=_floats(2), default=None, metavar="X,Y")
    sw.add_argument("--threads", type=int, default=None, help="worker threads (default: $COINFLIP_THREADS or all cores)")
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        args.func(args, out)
    except (ValueError, ArithmeticError, OSError, MemoryError) as exc:
        print(f"coinflip: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
