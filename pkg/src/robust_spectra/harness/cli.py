"""Command-line entry point.

Exit codes: 0 on success, 1 on bad input (including usage errors), 2 when a
computation fails numerically.
"""

import argparse
import logging
import math
import sys

import numpy as np

from .. import io
from .._parallel import resolve_threads
from ..errors import NumericalError, ParameterError
from ..estimator import robust_covariance
from ..net import build_delta_net, check_covering
from ..projector_lab import run_property_suite
from ..spectral import BoundParams, bound_b, eta, gamma
from .config import ExperimentConfig
from .experiments import run_experiment

log = logging.getLogger("robust_spectra")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _count(text):
    """Integers written as floats, e.g. ``1e6``."""
    v = float(text)
    if not v.is_integer():
        raise argparse.ArgumentTypeError(f"expected an integer, got {text}")
    return int(v)


def _emit(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)


def cmd_estimate(args):
    x = io.read_sample_csv(args.input)
    est, diag = robust_covariance(
        x, args.delta, args.eps, args.seed, mode=args.mode, kappa=args.kappa,
        trace=args.trace, hs_norm=args.hs_norm, lambda_mode=args.lambda_mode,
        vacuous=args.vacuous, threads=args.threads)
    _emit(io.write_matrix_csv(est, args.output), args.output)
    text = io.write_json(diag.to_json(), args.diagnostics)
    if args.diagnostics is None:
        sys.stderr.write(text)
    return 0


def cmd_bounds(args):
    p = BoundParams.create(args.n, args.eps, args.kappa, args.trace, args.hs_norm,
                           args.delta, sigma=args.sigma, s4=args.s4)
    if args.t:
        ts = args.t
    else:
        ts = np.geomspace(args.t_min, args.t_max, args.num).tolist()
    lines = ["t,gamma,eta,B\n"]
    for t in ts:
        g = gamma(t, p) if t > 0 else math.inf
        lines.append(f"{t!r},{g!r},{eta(t, p)!r},{bound_b(t, p)!r}\n")
    _emit(io._write(args.output, "".join(lines)), args.output)
    return 0


def cmd_experiment(args):
    data = io.read_json(args.config)
    if args.trials is not None:
        data = dict(data, trials=args.trials)
    config = ExperimentConfig.from_dict(data)
    report = run_experiment(config, threads=args.threads)
    out = args.output or config.output_path
    _emit(io.write_json(report.to_json(runtimes=not args.no_runtime), out), out)
    return 0


def _dims(text):
    if "-" in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def cmd_projector_lab(args):
    summary = run_property_suite(args.dims, args.pairs, args.seed)
    summary["passed"] = (not summary["failures"] and summary["pairing_ok"]
                         and summary["rank_criterion_ok"]
                         and max(summary["max_case_residual"].values()) <= 1e-9
                         and summary["norm_restriction_max_gap"] <= 1e-8)
    _emit(io.write_json(summary, args.output), args.output)
    return 0 if summary["passed"] else 2


def cmd_net(args):
    net = build_delta_net(args.d, args.delta, args.seed)
    _emit(io.write_net_csv(net, args.output), args.output)
    if args.check:
        worst, ok = check_covering(net, args.check, args.seed + 1)
        sys.stderr.write(f"points={len(net)} max_min_dist={worst:.6g} covered={ok}\n")
        return 0 if ok else 2
    return 0


def build_parser():
    parser = _Parser(prog="robust-spectra",
                     description="Robust covariance eigenvalues and spectral cut-off PCA.")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (overrides ROBUST_SPECTRA_THREADS)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("estimate", help="robust covariance of a CSV sample")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="matrix CSV (default stdout)")
    p.add_argument("--diagnostics", help="diagnostics JSON (default stderr)")
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("paired", "centered"), default="paired")
    p.add_argument("--lambda-mode", choices=("grid", "practical"), default="grid")
    p.add_argument("--vacuous", choices=("cap", "free"), default="cap")
    p.add_argument("--kappa", type=float)
    p.add_argument("--trace", type=float)
    p.add_argument("--hs-norm", type=float)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bounds", help="evaluate gamma, eta and B on a t grid")
    p.add_argument("--n", type=_count, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--trace", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--hs-norm", type=float)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--sigma", type=float)
    p.add_argument("--s4", type=float, default=math.inf)
    p.add_argument("--t", type=float, action="append", help="repeatable")
    p.add_argument("--t-min", type=float, default=0.01)
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--num", type=int, default=50)
    p.add_argument("--output")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--output")
    p.add_argument("--no-runtime", action="store_true", help="omit timing fields")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("projector-lab", help="projector-pair property suite")
    p.add_argument("--dims", type=_dims, default=list(range(2, 9)))
    p.add_argument("--pairs", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_projector_lab)

    p = sub.add_parser("net", help="emit a delta-net as CSV")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check", type=int, default=0, help="probe the covering with N vectors")
    p.add_argument("--output")
    p.set_defaults(func=cmd_net)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args.threads = resolve_threads(args.threads)
        return args.func(args)
    except ParameterError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
