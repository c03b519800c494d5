"""Command-line entry point.

Exit codes: 0 success, 2 unreadable input or bad configuration, 3 dimension
regime violated (p must be below the sample counts), 4 numerical failure.
"""
import argparse
import json
import logging
import sys
import time

import numpy as np

from ._config import ConfigError, DomainError, InputError, NumericalError, RegimeError
from .estimators import (estimate_frobenius, estimate_wasserstein, plugin_frobenius,
                         plugin_wasserstein)
from .harness import ExperimentConfig, run_experiment, write_outputs
from .known import DescentOptions, fit_covariance, trace_csv
from .models import read_matrix_csv, write_matrix_csv

EXIT_OK, EXIT_PARSE, EXIT_REGIME, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("rmtwasserstein")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _experiment_parser(sub, name, help_text):
    sp = sub.add_parser(name, help=help_text)
    sp.add_argument("--config", help="JSON file with ExperimentConfig fields")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--out", help="CSV path; the JSON sidecar is written to <out>.json")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--p", type=_int_list, help="dimension(s), comma separated")
    sp.add_argument("--n1", type=int)
    sp.add_argument("--n2", type=int)
    sp.add_argument("--n-list", type=_int_list, dest="n_list", help="sample sizes for figure2")
    sp.add_argument("--per-trial", action="store_true", default=None, dest="per_trial")
    sp.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    return sp


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rmtw", description="Random-matrix estimators of covariance distances.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _experiment_parser(sub, "table1", "plug-in vs corrected Wasserstein estimates over p")
    _experiment_parser(sub, "figure2", "covariance fitting against SCM and shrinkage over n")
    _experiment_parser(sub, "oracle-check", "contour oracle and Frobenius sanity checks")

    est = sub.add_parser("estimate", help="estimate distances between two sample files")
    est.add_argument("file1")
    est.add_argument("file2")
    est.add_argument("--out", help="also write the JSON report here")

    fit = sub.add_parser("fit", help="fit a covariance to one sample file")
    fit.add_argument("file2")
    fit.add_argument("--out", default="fit", help="prefix for <out>_matrix.csv and <out>_trace.csv")
    fit.add_argument("--max-iter", type=int, default=DescentOptions.max_iter)
    fit.add_argument("--tol", type=float, default=DescentOptions.tol)
    return parser


def _load_config(args):
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
        data["experiment"] = args.command
        cfg = ExperimentConfig.from_dict(data, validate=False)
    else:
        cfg = ExperimentConfig.defaults(args.command)
    overrides = {"seed": args.seed, "trials": args.trials, "workers": args.workers,
                 "p_list": args.p, "n1": args.n1, "n2": args.n2, "n_list": args.n_list,
                 "per_trial": args.per_trial, "out": args.out}
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    if cfg.out is None:
        cfg.out = f"{args.command}.csv"
    try:
        return cfg.validate()
    except (ConfigError, InputError):
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc!r}") from None


def cmd_experiment(args):
    cfg = _load_config(args)
    start = time.perf_counter()
    rows = run_experiment(cfg)
    paths = write_outputs(cfg, rows, cfg.out, elapsed=time.perf_counter() - start,
                          plot=not args.no_plot)
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_estimate(args):
    X1 = read_matrix_csv(args.file1)
    X2 = read_matrix_csv(args.file2)
    if X1.shape[0] != X2.shape[0]:
        raise InputError(f"dimension mismatch: {X1.shape[0]} rows vs {X2.shape[0]} rows")
    p, n1, n2 = X1.shape[0], X1.shape[1], X2.shape[1]
    if p >= min(n1, n2):
        raise RegimeError(
            f"p={p} is not below the sample counts n1={n1}, n2={n2}; "
            "the estimators need p/n < 1 for both samples")
    rmt = estimate_wasserstein(X1, X2)
    report = {
        "p": p, "n1": n1, "n2": n2,
        "wasserstein": {"plugin": plugin_wasserstein(X1, X2).value, "rmt": rmt.value},
        "frobenius": {"plugin": plugin_frobenius(X1, X2).value,
                      "rmt": estimate_frobenius(X1, X2).value},
        "diagnostics": rmt.diagnostics,
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def cmd_fit(args):
    X = read_matrix_csv(args.file2)
    p, n = X.shape
    if p >= n:
        raise RegimeError(f"p={p} is not below n={n}; fitting needs p/n < 1")
    result = fit_covariance(X, DescentOptions(max_iter=args.max_iter, tol=args.tol))
    matrix_path, trace_path = f"{args.out}_matrix.csv", f"{args.out}_trace.csv"
    write_matrix_csv(matrix_path, result.M)
    with open(trace_path, "w", newline="") as fh:
        fh.write(trace_csv(result.trace))
    last = result.trace[-1]
    print(json.dumps({
        "h": last.h_value, "grad_norm": last.grad_norm, "iterations": last.iteration,
        "converged": result.converged, "stalled": result.stalled,
        "matrix": matrix_path, "trace": trace_path,
    }, indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS = {"table1": cmd_experiment, "figure2": cmd_experiment, "oracle-check": cmd_experiment,
            "estimate": cmd_estimate, "fit": cmd_fit}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except RegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (InputError, ConfigError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
