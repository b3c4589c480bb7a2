"""Command line entry point: ``bayesmono {test,simulate,calibrate,bench,bf}``.

Exit codes: 0 success, 1 input or validation error, 2 monotonicity rejected
(``test --exit-code-decision`` only).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bayes_factor import null_bayes_factor_experiment, prior_prob_monotone
from .bench import (
    CalibrationCache,
    Scenario,
    benchmark_function,
    benchmark_scenarios,
    format_replications,
    format_table,
    load_scenarios,
    rejection_table,
    simulate_dataset,
)
from .calibrate import DEFAULT_GRID_LAMBDA, DEFAULT_GRID_MU, auto_hyperparams, calibrate_mu_lambda
from .conjugate import HyperParams
from .ingest import ParseError, read_series
from .mono_test import SIGMA_METHODS, run_test
from .sampler import ChainConfig

EXIT_ERROR = 1
EXIT_REJECT = 2

REPORT_FIELDS = (
    "n", "direction", "pi_hat", "delta", "cutoff", "M0", "sigma_hat", "K_used", "modal_k",
    "acceptance_rate", "mu", "lambda", "m", "a", "b", "k_min", "k_max", "seed", "k_histogram",
)


class _Parser(argparse.ArgumentParser):
    # exit status 2 is reserved for the test decision
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _add_common(p, iterations=5000):
    p.add_argument("--iterations", "-K", type=int, default=iterations, help="MCMC iterations per chain")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=float, default=0.05, help="nominal type-I error")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")


def _add_calibration(p):
    p.add_argument("--calib-reps", type=int, default=200, help="null datasets per grid cell")
    p.add_argument("--grid-mu", type=_floats, default=list(DEFAULT_GRID_MU))
    p.add_argument("--grid-lambda", type=_floats, default=list(DEFAULT_GRID_LAMBDA))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bayesmono", description="Bayesian nonparametric test of monotone regression.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="test a series for monotonicity")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--direction", choices=("non-increasing", "increasing"), default="non-increasing")
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--m", type=float, default=None)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--gamma0", type=float, default=0.5)
    p.add_argument("--gamma1", type=float, default=0.5)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--sigma-method", choices=SIGMA_METHODS, default="modal")
    p.add_argument("--out", default=None, help="directory for report.txt / calibration.csv")
    p.add_argument("--json-out", default=None)
    p.add_argument("--exit-code-decision", action="store_true", help="exit 2 when monotonicity is rejected")
    _add_common(p)
    _add_calibration(p)

    p = sub.add_parser("simulate", help="draw a dataset from a benchmark function")
    p.add_argument("--function", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("calibrate", help="choose (mu, lambda) by null simulation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default=None)
    _add_common(p)
    _add_calibration(p)

    p = sub.add_parser("bench", help="rejection-rate table over benchmark scenarios")
    p.add_argument("--scenarios", default=None, help="JSON scenario file")
    p.add_argument("--functions", type=_ints, default=list(range(1, 10)))
    p.add_argument("--ns", type=_ints, default=[100])
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--out", required=True)
    _add_common(p)
    _add_calibration(p)

    p = sub.add_parser("bf", help="Bayes factor experiment under f = 0")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--sigma2", type=float, default=0.01)
    p.add_argument("--mu", type=float, default=0.01)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--out", required=True)
    _add_common(p)
    return parser


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, dict):
        return ",".join(f"{k}:{v}" for k, v in value.items())
    return str(value)


def render_report(record: dict) -> str:
    return "".join(f"{key}: {_fmt(record[key])}\n" for key in REPORT_FIELDS)


def _write_calibration(rep, path: Path) -> None:
    lines = ["mu,lambda,type1_error\n"]
    lines += [f"{mu:g},{lam:g},{rate:.6g}\n" for mu, lam, rate in rep.rows()]
    path.write_text("".join(lines))


def cmd_test(args) -> int:
    data = read_series(args.input)
    if args.direction == "increasing":
        data = data.negated()
    calibration = None
    mu, lam = args.mu, args.lam
    if mu is None or lam is None:
        calibration = calibrate_mu_lambda(
            data.n, level=args.level, grid_mu=[mu] if mu is not None else args.grid_mu,
            grid_lambda=[lam] if lam is not None else args.grid_lambda, reps=args.calib_reps,
            seed=args.seed, iterations=args.iterations, k_min=args.k_min, threads=args.threads,
        )
        mu, lam = calibration.mu, calibration.lam
    hp = auto_hyperparams(
        data, mu, lam, m=args.m, a=args.a, b=args.b, gamma0=args.gamma0, gamma1=args.gamma1,
        level=args.level, k_min=args.k_min, k_max=args.k_max,
    )
    cfg = ChainConfig(iterations=args.iterations, burn_in=args.burn_in, seed=args.seed)
    report = run_test(data, hp, cfg, sigma_method=args.sigma_method)

    record = report.as_dict()
    record.update(direction=args.direction, mu=hp.mu, **{"lambda": hp.lam}, m=hp.m, a=hp.a, b=hp.b,
                  k_min=hp.k_min, k_max=hp.effective_k_max(data.n), seed=args.seed)
    record["k_histogram"] = {int(k): v for k, v in record["k_histogram"].items()}
    text = render_report(record)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text)
        if calibration is not None:
            _write_calibration(calibration, out / "calibration.csv")
    if args.json_out:
        ordered = {key: record[key] for key in REPORT_FIELDS}
        ordered["k_histogram"] = {str(k): v for k, v in ordered["k_histogram"].items()}
        Path(args.json_out).write_text(json.dumps(ordered, indent=2) + "\n")
    if args.exit_code_decision and report.delta == 1:
        return EXIT_REJECT
    return 0


def cmd_simulate(args) -> int:
    f = benchmark_function(args.function)
    sc = Scenario(args.function, args.n, args.sigma2, 1, 1, args.seed)
    data = simulate_dataset(f, sc.sigma2, args.n, np.random.default_rng(args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"f{args.function}_n{args.n}_seed{args.seed}.csv"
    lines = [f"# f{args.function} sigma2={sc.sigma2:g} n={args.n} seed={args.seed}\n"]
    lines += [f"{x:.10g},{y:.17g}\n" for x, y in zip(data.x, data.y)]
    path.write_text("".join(lines))
    print(path)
    return 0


def cmd_calibrate(args) -> int:
    rep = calibrate_mu_lambda(
        args.n, level=args.level, grid_mu=args.grid_mu, grid_lambda=args.grid_lambda, reps=args.calib_reps,
        seed=args.seed, iterations=args.iterations, k_min=args.k_min, threads=args.threads,
    )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_calibration(rep, out / "calibration.csv")
    print(f"n: {rep.n}\nmu: {rep.mu:g}\nlambda: {rep.lam:g}\nfallback: {int(rep.fallback)}")
    for mu, lam, rate in rep.rows():
        print(f"  mu={mu:g} lambda={lam:g} type1={rate:.4f}")
    return 0


def cmd_bench(args) -> int:
    if args.scenarios:
        scenarios = load_scenarios(args.scenarios)
    else:
        scenarios = benchmark_scenarios(args.ns, args.reps, args.iterations, args.seed, args.functions)
    if args.mu is not None and args.lam is not None:
        source = (args.mu, args.lam)
        cache = None
    else:
        cache = CalibrationCache(reps=args.calib_reps, seed=args.seed + 1, iterations=args.iterations,
                                 level=args.level, k_min=args.k_min, threads=args.threads,
                                 grid_mu=args.grid_mu, grid_lambda=args.grid_lambda)
        source = cache
    results = rejection_table(scenarios, source, args.threads, level=args.level, k_min=args.k_min)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = format_table(results)
    (out / "table.csv").write_text(table)
    (out / "replications.csv").write_text(format_replications(results))
    if cache is not None:
        lines = ["n,mu,lambda,type1_error\n"]
        for n, rep in sorted(cache.reports.items()):
            lines += [f"{n},{mu:g},{lam:g},{rate:.6g}\n" for mu, lam, rate in rep.rows()]
        (out / "calibration.csv").write_text("".join(lines))
    sys.stdout.write(table)
    return 0


def cmd_bf(args) -> int:
    res = null_bayes_factor_experiment(args.n, args.reps, args.iterations, args.seed, args.sigma2, args.mu,
                                       args.lam, args.k_min, args.bins, args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bf_histogram.csv").write_text(res.histogram_csv())
    (out / "log_bf.csv").write_text(
        "replication,log_bf,monotone_draws\n"
        + "".join(f"{i},{v:.6g},{h}\n" for i, (v, h) in enumerate(zip(res.log_bfs, res.monotone_counts)))
    )
    prior = prior_prob_monotone(HyperParams(lam=args.lam, mu=args.mu, k_min=args.k_min), args.n)
    print(f"reps: {args.reps}\nprior_monotone: {prior:.6g}\nnegative_fraction: {res.negative_fraction:.6g}\n"
          f"pos_inf: {res.n_pos_inf}\nneg_inf: {res.n_neg_inf}")
    return 0


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "calibrate": cmd_calibrate, "bench": cmd_bench,
            "bf": cmd_bf}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ValueError, OSError) as exc:
        print(f"bayesmono: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
