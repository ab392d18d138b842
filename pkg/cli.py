"""
Gauss-Distill command line.

Subcommands:
    protocol    steps 1-3 at one parameter point
    sweep       protocol over a (vA, vB) grid
    robustness  steps 2-3 on gamma1 + epsilon * identity
    sample      Monte Carlo LOCC preparation and Simon check
    threshold   Sigma(x) = x (u x + v) fit and x_th

Exit codes: 0 evaluated, 2 invalid arguments, 3 output failure.
"""
import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

from api.models import (
    ProtocolReportModel,
    RobustnessRowModel,
    SampleReportModel,
    SweepRecordModel,
    ThresholdModel,
)
from config import settings, validate_settings
from core.errors import GaussianToolkitError, ParameterError
from core.montecarlo import simulate_protocol, verify_simon
from core.protocol import (
    FLAGSHIP_X,
    ProtocolParams,
    compute_x_sep,
    find_x_threshold,
    make_gamma1,
    run_protocol,
)
from core.sweep import (
    DEFAULT_STEPS,
    DEFAULT_VA_RANGE,
    DEFAULT_VB_RANGE,
    SweepSpec,
    XPolicy,
    run_robustness,
    run_sweep,
    variances_to_squeezing,
)
from utils.output import OutputFormat, protocol_summary, render, write_output

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3

DEFAULT_EPSILONS = [0.0, 0.005, 0.01, 0.02]


def _add_common(parser: argparse.ArgumentParser, default_format: OutputFormat) -> None:
    parser.add_argument("--format", type=OutputFormat, choices=list(OutputFormat),
                        default=default_format, help="output format")
    parser.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    parser.add_argument("--workers", type=int, default=0,
                        help="worker threads (default: GAUSS_DISTILL_THREADS or cpu count)")


def _add_point(parser: argparse.ArgumentParser, with_x: bool = True) -> None:
    parser.add_argument("--d", type=float, help="squeezing exponent d")
    parser.add_argument("--r", type=float, help="squeezing exponent r")
    parser.add_argument("--va", type=float, help="variance e^{2(d-r)}")
    parser.add_argument("--vb", type=float, help="variance e^{2(d+r)}")
    if with_x:
        parser.add_argument("--x", type=float, default=FLAGSHIP_X, help="noise strength x")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gauss-distill",
        description="Entanglement distribution through a separable Gaussian ancilla.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    protocol = sub.add_parser("protocol", help="run steps 1-3 at one parameter point")
    _add_point(protocol)
    protocol.add_argument("--measure", action="store_true", help="homodyne-condition on mode C")
    protocol.add_argument("--angle", type=float, default=math.pi / 4,
                          help="homodyne quadrature angle in radians")
    _add_common(protocol, OutputFormat.JSON)

    sweep = sub.add_parser("sweep", help="evaluate the protocol over a (vA, vB) grid")
    sweep.add_argument("--va-min", type=float, default=DEFAULT_VA_RANGE[0])
    sweep.add_argument("--va-max", type=float, default=DEFAULT_VA_RANGE[1])
    sweep.add_argument("--vb-min", type=float, default=DEFAULT_VB_RANGE[0])
    sweep.add_argument("--vb-max", type=float, default=DEFAULT_VB_RANGE[1])
    sweep.add_argument("--va-steps", type=int, default=DEFAULT_STEPS)
    sweep.add_argument("--vb-steps", type=int, default=DEFAULT_STEPS)
    policy = sweep.add_mutually_exclusive_group()
    policy.add_argument("--x", type=float, help="fixed noise strength at every point")
    policy.add_argument("--margin", type=float,
                        help="x = (1 + margin) * max(x_th, x_sep) (default SWEEP_THRESHOLD_MARGIN)")
    _add_common(sweep, OutputFormat.CSV)

    robustness = sub.add_parser("robustness", help="steps 2-3 on gamma1 + epsilon * identity")
    _add_point(robustness)
    robustness.add_argument("--epsilons", type=float, nargs="+", default=DEFAULT_EPSILONS)
    _add_common(robustness, OutputFormat.CSV)

    sample = sub.add_parser("sample", help="Monte Carlo LOCC preparation")
    _add_point(sample)
    sample.add_argument("--n", type=int, default=settings.DEFAULT_SAMPLES, help="sample count")
    sample.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    _add_common(sample, OutputFormat.JSON)

    threshold = sub.add_parser("threshold", help="fit Sigma(x) = x (u x + v) and print x_th")
    _add_point(threshold, with_x=False)
    threshold.add_argument("--step", type=int, choices=(2, 3), default=2)
    _add_common(threshold, OutputFormat.CSV)

    return parser


def _squeezing(args: argparse.Namespace):
    """(d, r) from either parameter form; exactly one form must be given."""
    has_dr = args.d is not None or args.r is not None
    has_v = args.va is not None or args.vb is not None
    if has_dr == has_v:
        raise ParameterError("Give exactly one of (--d, --r) or (--va, --vb)")
    if has_dr:
        if args.d is None or args.r is None:
            raise ParameterError("Both --d and --r are required")
        return args.d, args.r
    if args.va is None or args.vb is None:
        raise ParameterError("Both --va and --vb are required")
    if not (args.vb > args.va >= 1.0):
        raise ParameterError(f"Protocol requires vB > vA >= 1, got vA={args.va}, vB={args.vb}")
    return variances_to_squeezing(args.va, args.vb)


def _params(args: argparse.Namespace) -> ProtocolParams:
    d, r = _squeezing(args)
    if not args.x > 0:
        raise ParameterError(f"Noise strength --x must be > 0, got {args.x}")
    return ProtocolParams(d=d, r=r, x=args.x)


def cmd_protocol(args: argparse.Namespace) -> int:
    report = ProtocolReportModel.from_report(
        run_protocol(_params(args), with_measurement=args.measure, measurement_angle=args.angle)
    )
    write_output(render(report, args.format), args.out)
    if not args.quiet:
        sys.stderr.write(protocol_summary(report))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    policy = XPolicy.fixed(args.x) if args.x is not None else XPolicy.threshold_margin(args.margin)
    spec = SweepSpec(
        va_range=(args.va_min, args.va_max),
        vb_range=(args.vb_min, args.vb_max),
        va_steps=args.va_steps,
        vb_steps=args.vb_steps,
        x_policy=policy,
    )
    records = [SweepRecordModel.from_record(rec) for rec in run_sweep(spec, workers=args.workers)]
    write_output(render(records, args.format), args.out)
    return EXIT_OK


def cmd_robustness(args: argparse.Namespace) -> int:
    rows = [RobustnessRowModel.from_row(row) for row in run_robustness(_params(args), args.epsilons)]
    write_output(render(rows, args.format), args.out)
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    params = _params(args)
    if args.n < 2:
        raise ParameterError(f"Sampling needs --n >= 2, got {args.n}")
    estimate, gamma_ab = simulate_protocol(params, args.n, args.seed, workers=args.workers)
    simon = verify_simon(gamma_ab, stderr_scale=estimate.stderr_scale)
    analytic = make_gamma1(params.d, params.r, params.x).tolist()
    report = SampleReportModel.build(params, args.seed, estimate, analytic, simon)
    write_output(render(report, args.format), args.out)
    return EXIT_OK


def cmd_threshold(args: argparse.Namespace) -> int:
    d, r = _squeezing(args)
    fit = find_x_threshold(d, r, args.step)
    write_output(render(ThresholdModel.from_fit(fit, d, r, compute_x_sep(d, r)), args.format), args.out)
    return EXIT_OK


COMMANDS = {
    "protocol": cmd_protocol,
    "sweep": cmd_sweep,
    "robustness": cmd_robustness,
    "sample": cmd_sample,
    "threshold": cmd_threshold,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        level=logging.WARNING if args.quiet else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    try:
        validate_settings()
        return COMMANDS[args.command](args)
    except (GaussianToolkitError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    except OSError as e:
        sys.stderr.write(f"error: cannot write output: {e}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
