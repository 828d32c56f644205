"""Command-line interface: ``renewal-count <command> [options]``.

Commands write CSV (fit writes JSON) to standard output. Exit status is 0
on success, 2 for usage and input errors and 3 for numerical failures
(non-convergence, underflow, degenerate grids).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

from .datasets import FERTILITY_FREQUENCIES
from .depril import RecursionDomainError, chain_prob, depril_censored, depril_prob
from .direct import all_probs, default_steps
from .distributions import ParameterError, SpecParseError, Weibull, parse_distribution
from .fitting import CountData, DataError, InsufficientCellsError, ModelSpec, fit, gof_chisq
from .modified import ModifiedSpec, modified_all_probs, modified_prob
from .montecarlo import simulate_pmf
from .results import Stage
from .study import ENGINES, bench, order_study, reference_probs

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _writer(out):
    return csv.writer(out, lineterminator="\n")


# ---------------------------------------------------------------- commands


def cmd_prob(args, out) -> int:
    rest = parse_distribution(args.dist)
    first = parse_distribution(args.first_dist) if args.first_dist else None
    stage = Stage(args.extrapolate)
    engine = args.engine or ("depril" if args.m is not None else "direct")
    if first is not None and engine == "chain":
        raise UsageError("--first-dist is not available with --engine chain")
    if args.at_least and engine != "depril":
        raise UsageError("--at-least needs --engine depril")
    if args.at_least and args.m is None:
        raise UsageError("--at-least needs --m")
    n = args.n_steps
    ms = [args.m] if args.m is not None else list(range(args.m_max + 1))
    if first is not None:
        spec = ModifiedSpec(first, rest)
        if args.m is None:
            probs = modified_all_probs(spec, args.t, args.m_max, n, stage).probs
        else:
            probs = [min(max(modified_prob(spec, args.t, args.m, n, stage), 0.0), 1.0)]
    elif engine == "direct":
        pv = all_probs(rest, args.t, max(ms), n, stage)
        probs = [pv.probs[m] for m in ms]
    elif engine == "depril":
        f = depril_censored if args.at_least else depril_prob
        probs = [min(max(f(rest, args.t, m, n, stage), 0.0), 1.0) for m in ms]
    else:
        probs = [min(max(chain_prob(rest, args.t, m, n, stage), 0.0), 1.0) for m in ms]
    w = _writer(out)
    w.writerow(["m", "probability"])
    for m, p in zip(ms, probs):
        w.writerow([m, repr(float(p))])
    return EXIT_OK


def _load_data(args) -> CountData:
    if args.data and args.frequencies:
        raise UsageError("give either --data or --frequencies")
    if args.data:
        return CountData.from_csv(args.data, args.count_column)
    if args.frequencies:
        return CountData.from_frequencies(_ints(args.frequencies))
    if args.fertility:
        return CountData.from_frequencies(FERTILITY_FREQUENCIES)
    raise UsageError("need --data, --frequencies or --fertility")


def cmd_fit(args, out) -> int:
    data = _load_data(args)
    if args.formula in (None, "", "1"):
        covs: tuple[str, ...] = ()
    elif args.formula == ".":
        covs = data.covariate_names
    else:
        covs = tuple(c.strip() for c in args.formula.split("+") if c.strip())
    for c in covs:
        if c not in data.covariate_names:
            raise DataError(f"formula names unknown column {c!r}")
    model = ModelSpec(args.family, covs, args.hurdle, args.n_steps or default_steps(Stage.STAGE2))
    result = fit(model, data)
    report = result.to_dict()
    try:
        stat, df, p = gof_chisq(result, data)
        report["gof"] = {"chi2": stat, "df": df, "p_value": p}
    except InsufficientCellsError as exc:
        report["gof"] = {"error": str(exc)}
    out.write(json.dumps(report, indent=2) + "\n")
    if args.frequencies_csv:
        with open(args.frequencies_csv, "w", newline="") as fh:
            w = _writer(fh)
            w.writerow(["count", "observed", "expected"])
            for row in report["frequencies"]:
                w.writerow([row["count"], row["observed"], repr(row["expected"])])
    if not result.converged or not math.isfinite(result.log_likelihood):
        print(f"fit did not converge: {result.message}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    rest = parse_distribution(args.dist)
    spec = ModifiedSpec(parse_distribution(args.first_dist), rest) if args.first_dist else rest
    sim = simulate_pmf(spec, args.t, args.draws, args.seed, args.threads)
    w = _writer(out)
    w.writerow(["count", "frequency", "probability", "std_error"])
    for row in sim.rows():
        w.writerow([row[0], row[1], repr(row[2]), repr(row[3])])
    return EXIT_OK


def cmd_bench(args, out) -> int:
    for e in args.engines:
        if e not in ENGINES:
            raise UsageError(f"unknown engine {e!r}; choose from {', '.join(ENGINES)}")
    spec = parse_distribution(args.dist)
    rows = bench(args.engines, args.m, args.n, args.repetitions, spec)
    w = _writer(out)
    w.writerow(["engine", "m", "n_steps", "seconds", "relative", "convolutions"])
    for r in rows:
        w.writerow([r.engine, r.m, r.n_steps, f"{r.seconds:.6e}", f"{r.relative:.4f}",
                    "" if r.convolutions is None else r.convolutions])
    return EXIT_OK


def cmd_order_study(args, out) -> int:
    w = _writer(out)
    w.writerow(["beta", "m", "raw_err", "stage1_err", "stage2_err", "gamma_raw", "gamma_stage1", "gamma_stage2"])
    for beta in args.beta:
        spec = Weibull(args.alpha, beta)
        ref = reference_probs(spec, args.t, args.m_max, args.reference_steps)
        study = order_study(spec, args.t, args.n, args.m_max, ref)
        for row in study.rows():
            w.writerow([beta, int(row[0])] + [f"{v:.6e}" for v in row[1:]])
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="renewal-count", description=__doc__.splitlines()[0])
    p.add_argument("--print-config", action="store_true",
                   help="print the resolved options as JSON to stderr before running")
    sub = p.add_subparsers(dest="command", required=True)

    stages = [s.value for s in Stage]

    q = sub.add_parser("prob", help="count probabilities P_m(t)")
    q.add_argument("--dist", required=True, help='inter-arrival spec, e.g. "weibull(alpha=1,beta=2)"')
    q.add_argument("--first-dist", help="first-gap distribution (modified renewal)")
    q.add_argument("--t", type=float, default=1.0)
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--m", type=int, help="a single count")
    g.add_argument("--m-max", type=int, help="all counts 0..m-max")
    q.add_argument("--engine", choices=ENGINES)
    q.add_argument("--n-steps", type=int, help="base step count (default 24 extrapolated, 132 raw)")
    q.add_argument("--extrapolate", choices=stages, default="stage2")
    q.add_argument("--at-least", action="store_true", help="P(N_t >= m) instead of P(N_t = m)")
    q.set_defaults(func=cmd_prob)

    f = sub.add_parser("fit", help="maximum likelihood fit, JSON report")
    f.add_argument("--data", help="CSV with a header row")
    f.add_argument("--frequencies", help="comma-separated frequencies of counts 0, 1, ...")
    f.add_argument("--fertility", action="store_true", help="use the bundled fertility frequency table")
    f.add_argument("--count-column", default="count")
    f.add_argument("--family", default="weibull", choices=["poisson", "weibull", "gamma", "gengamma", "burr"])
    f.add_argument("--formula", help='covariates joined by "+", or "." for all columns')
    f.add_argument("--hurdle", action="store_true", help="separate scale for the first event")
    f.add_argument("--n-steps", type=int)
    f.add_argument("--frequencies-csv", help="also write observed vs expected frequencies here")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="Monte Carlo pmf of N(t)")
    s.add_argument("--dist", required=True)
    s.add_argument("--first-dist")
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--draws", type=int, default=100_000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--threads", type=int, help="worker threads (default RENEWAL_COUNT_THREADS or all cores)")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="engine timings on a prepared grid")
    b.add_argument("--engines", type=lambda v: [e.strip() for e in v.split(",") if e.strip()],
                   default=list(ENGINES))
    b.add_argument("--m", type=_ints, default=[4, 16, 64])
    b.add_argument("--n", type=_ints, default=[48])
    b.add_argument("--repetitions", type=int, default=7)
    b.add_argument("--dist", default="weibull(alpha=1,beta=1.2)")
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("order-study", help="errors and empirical orders per extrapolation stage")
    o.add_argument("--beta", type=_floats, default=[1.1])
    o.add_argument("--alpha", type=float, default=1.0)
    o.add_argument("--t", type=float, default=1.0)
    o.add_argument("--n", type=int, default=32)
    o.add_argument("--m-max", type=int, default=14)
    o.add_argument("--reference-steps", type=int, default=20000)
    o.set_defaults(func=cmd_order_study)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.print_config:
        cfg = {k: v for k, v in vars(args).items() if k != "func"}
        print(json.dumps(cfg, sort_keys=True), file=sys.stderr)
    try:
        if getattr(args, "m_max", None) is not None and args.m_max < 0:
            raise UsageError("--m-max must be non-negative")
        return args.func(args, out)
    except (UsageError, SpecParseError, ParameterError, DataError, OSError) as exc:
        print(f"renewal-count: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RecursionDomainError, FloatingPointError) as exc:
        print(f"renewal-count: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"renewal-count: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
