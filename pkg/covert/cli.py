"""Command-line front end: single-point computations, design solves, sweeps and Monte Carlo validation.

Usage examples:
  python -m covert design --max-blocklength 100 --epsilon 0.1 --mode kl
  python -m covert sweep --variable N --values 100 200 400 800 --format json
  python -m covert validate --seed 42 --trials 100000
"""
import sys
import argparse
import logging
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional

from covert import __version__
from covert.channel import ChannelParams, db_to_linear, delta_fbl, rate_fbl
from covert.config import LOG_LEVELS, OUTPUT_FORMATS, Settings, resolve_settings
from covert.database import Database
from covert.design import ConstraintMode, CovertConstraint, DesignResult, design_at_delta, optimize_design, optimize_rate
from covert.detection import total_error
from covert.errors import ConvergenceError, DomainError
from covert.montecarlo import McConfig, validate_point
from covert.output import emit
from covert.result_cache import DesignCache
from covert.specfun import DEFAULT_TOLERANCE
from covert.sweep import FixedParams, SweepAborted, SweepSpec, SweepVariable, run_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_INVALID = 2
EXIT_CONVERGENCE = 3

RATE_COLUMNS = ["gamma_b", "blocklength", "rate", "delta", "eta"]
DETECT_COLUMNS = ["power", "blocklength", "threshold", "p_false", "p_miss", "xi", "kl", "pinsker_bound"]
DESIGN_COLUMNS = ["max_blocklength", "p_star", "total_power", "r_star", "delta_star", "eta_star",
                  "eta_per_use", "constraint_mode", "residual", "iterations", "solver_path"]
VALIDATE_COLUMNS = ["blocklength", "power", "p_false", "p_false_hat", "stderr_false",
                    "p_miss", "p_miss_hat", "stderr_miss", "passed"]

DEFAULT_VALIDATION_BLOCKLENGTHS = [1, 10, 100]
DEFAULT_VALIDATION_POWERS = [0.1, 1.0, 10.0]

# command-line dest -> Settings field
_SETTING_FLAGS = {
    "sigma_b2": "sigma_b2",
    "sigma_w2": "sigma_w2",
    "epsilon": "epsilon",
    "max_blocklength": "max_blocklength",
    "mode": "mode",
    "format": "output_format",
    "precision": "precision",
    "seed": "seed",
    "trials": "trials",
    "workers": "workers",
    "cache": "cache_path",
    "log_level": "log_level",
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("common options")
    group.add_argument("--config", default=None, help="JSON file of settings (field names as keys)")
    group.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=None)
    group.add_argument("--sigma-b2", type=float, default=None, help="Noise power at Bob")
    group.add_argument("--sigma-w2", type=float, default=None, help="Noise power at Willie")
    group.add_argument("--epsilon", type=float, default=None, help="Covertness level in (0, 0.5]")
    group.add_argument("--max-blocklength", type=int, default=None, help="Maximum blocklength N")
    group.add_argument("--mode", type=str.lower, choices=[m.value for m in ConstraintMode], default=None,
                       help="Covertness constraint formulation")
    group.add_argument("--output", default=None, help="Output file (default: standard output)")
    group.add_argument("--format", type=str.lower, choices=OUTPUT_FORMATS, default=None)
    group.add_argument("--precision", type=int, default=None, help="Significant digits in output")
    group.add_argument("--seed", type=int, default=None, help="Monte Carlo seed")
    group.add_argument("--trials", type=int, default=None, help="Monte Carlo trials per point")
    group.add_argument("--workers", type=int, default=None, help="Parallel workers")
    group.add_argument("--cache", default=None, help="DuckDB file caching design solves")
    return common


def _add_power_arguments(parser: argparse.ArgumentParser):
    power = parser.add_mutually_exclusive_group(required=True)
    power.add_argument("--power", type=float, help="Transmit power per channel use (linear)")
    power.add_argument("--power-db", type=float, help="Transmit power per channel use in dB")


def _power(args: argparse.Namespace) -> float:
    return args.power if args.power is not None else db_to_linear(args.power_db)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covert", description="Covert communication design under finite blocklength")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", dest="global_config", default=None, help=argparse.SUPPRESS)
    parser.add_argument("--log-level", dest="global_log_level", type=str.upper, choices=LOG_LEVELS,
                        default=None, help=argparse.SUPPRESS)
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    rate = subparsers.add_parser("rate", parents=[common], help="Coding rate or decoding error at one point")
    _add_power_arguments(rate)
    rate.add_argument("--blocklength", type=int, required=True)
    target = rate.add_mutually_exclusive_group(required=True)
    target.add_argument("--delta", type=float, help="Decoding error probability; reports the rate")
    target.add_argument("--rate", type=float, help="Coding rate in bits per use; reports delta")

    detect = subparsers.add_parser("detect", parents=[common], help="Radiometer error rates at one point")
    _add_power_arguments(detect)
    detect.add_argument("--blocklength", type=int, required=True)

    design = subparsers.add_parser("design", parents=[common], help="Optimal covert operating point")
    design.add_argument("--delta", type=float, default=None, help="Fix delta instead of optimising it")
    design.add_argument("--search", choices=["delta", "rate"], default="delta",
                        help="Variable the throughput is maximised over")

    sweep = subparsers.add_parser("sweep", parents=[common], help="Design results over a parameter grid")
    sweep.add_argument("--variable", choices=[v.value for v in SweepVariable], required=True)
    sweep.add_argument("--values", nargs="+", type=float, required=True)
    sweep.add_argument("--delta", type=float, default=None,
                       help="Fixed delta for N, epsilon, sigma_b2 and power sweeps")

    validate = subparsers.add_parser("validate", parents=[common], help="Monte Carlo check of the detector formulas")
    validate.add_argument("--blocklengths", nargs="+", type=int, default=DEFAULT_VALIDATION_BLOCKLENGTHS)
    validate.add_argument("--powers", nargs="+", type=float, default=DEFAULT_VALIDATION_POWERS)
    validate.add_argument("--sigmas", type=float, default=3.0, help="Pass band in standard errors")
    return parser


def settings_from_args(args: argparse.Namespace) -> Settings:
    overrides = {field: getattr(args, dest, None) for dest, field in _SETTING_FLAGS.items()}
    if overrides["log_level"] is None:
        overrides["log_level"] = getattr(args, "global_log_level", None)
    config_path = getattr(args, "config", None) or getattr(args, "global_config", None)
    return resolve_settings(overrides, config_path)


def configure_logging(level: str):
    logging.basicConfig(
        level=getattr(logging, level),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger().setLevel(getattr(logging, level))


def _meta(command: str, settings: Settings, **extra: Any) -> Dict[str, Any]:
    parameters = settings.as_dict()
    parameters.update({k: v for k, v in extra.items() if v is not None})
    return {"tool": "covert-fbl", "version": __version__, "command": command, "parameters": parameters}


def _constraint(settings: Settings) -> CovertConstraint:
    return CovertConstraint(settings.epsilon, ConstraintMode(settings.mode))


@contextmanager
def _design_cache(settings: Settings) -> Iterator[Optional[DesignCache]]:
    if not settings.cache_path:
        yield None
        return
    with Database(settings.cache_path) as db:
        yield DesignCache(db)


def cmd_rate(args: argparse.Namespace, settings: Settings) -> int:
    power = _power(args)
    params = ChannelParams(sigma_b2=settings.sigma_b2, sigma_w2=settings.sigma_w2, power=power)
    n = args.blocklength
    if args.delta is not None:
        delta, rate = args.delta, rate_fbl(params, n, args.delta)
    else:
        rate, delta = args.rate, delta_fbl(params, n, args.rate)
    # a negative rate carries no information
    row = {"gamma_b": params.gamma_b, "blocklength": n, "rate": rate, "delta": delta,
           "eta": n * max(rate, 0.0) * (1.0 - delta)}
    emit([row], RATE_COLUMNS, settings.output_format, args.output,
         _meta("rate", settings, power=power, blocklength=n, delta=args.delta, rate=args.rate),
         settings.precision)
    return EXIT_OK


def cmd_detect(args: argparse.Namespace, settings: Settings) -> int:
    power = _power(args)
    params = ChannelParams(sigma_b2=settings.sigma_b2, sigma_w2=settings.sigma_w2, power=power)
    report = total_error(params, args.blocklength)
    row = {"power": power, "blocklength": args.blocklength, **report.as_row()}
    emit([row], DETECT_COLUMNS, settings.output_format, args.output,
         _meta("detect", settings, power=power, blocklength=args.blocklength), settings.precision)
    return EXIT_OK


def design_row(result: DesignResult) -> Dict[str, Any]:
    return {
        "max_blocklength": result.n_star,
        "p_star": result.p_star,
        "total_power": result.total_power,
        "r_star": result.r_star,
        "delta_star": result.delta_star,
        "eta_star": result.eta_star,
        "eta_per_use": result.eta_per_use,
        "constraint_mode": result.mode.value,
        "residual": result.residual,
        "iterations": result.iterations,
        "solver_path": result.solver_path.value,
    }


def _solve_design(args: argparse.Namespace, settings: Settings) -> DesignResult:
    N, constraint = settings.max_blocklength, _constraint(settings)
    if args.search == "rate":
        return optimize_rate(N, constraint, settings.sigma_b2, settings.sigma_w2)
    with _design_cache(settings) as cache:
        if cache:
            cached = cache.get(N, constraint, settings.sigma_b2, settings.sigma_w2, DEFAULT_TOLERANCE, args.delta)
            if cached:
                return cached
        if args.delta is None:
            result = optimize_design(N, constraint, settings.sigma_b2, settings.sigma_w2)
        else:
            result = design_at_delta(N, constraint, settings.sigma_b2, settings.sigma_w2, args.delta)
        if cache:
            cache.set(result, DEFAULT_TOLERANCE, args.delta)
    return result


def cmd_design(args: argparse.Namespace, settings: Settings) -> int:
    result = _solve_design(args, settings)
    emit([design_row(result)], DESIGN_COLUMNS, settings.output_format, args.output,
         _meta("design", settings, delta=args.delta, search=args.search), settings.precision)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    fixed = FixedParams(
        sigma_b2=settings.sigma_b2,
        sigma_w2=settings.sigma_w2,
        epsilon=settings.epsilon,
        max_blocklength=settings.max_blocklength,
        mode=ConstraintMode(settings.mode),
        delta=args.delta,
    )
    spec = SweepSpec(variable=args.variable, values=tuple(args.values), fixed=fixed,
                     output_format=settings.output_format, output_path=args.output)
    meta = _meta("sweep", settings, variable=spec.variable.value, values=list(spec.values), delta=args.delta)
    with _design_cache(settings) as cache:
        try:
            rows = run_sweep(spec, workers=settings.workers, cache=cache)
        except SweepAborted as e:
            emit(e.rows, spec.columns, spec.output_format, spec.output_path, meta, settings.precision)
            print(f"warning: partial output, {len(e.rows)} of {len(spec.values)} rows written "
                  f"before {spec.variable.value}={e.failed_value} failed", file=sys.stderr)
            raise
    emit(rows, spec.columns, spec.output_format, spec.output_path, meta, settings.precision)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, settings: Settings) -> int:
    rows: List[Dict[str, Any]] = []
    for n in args.blocklengths:
        for power in args.powers:
            params = ChannelParams(sigma_b2=settings.sigma_b2, sigma_w2=settings.sigma_w2, power=power)
            config = McConfig(trials=settings.trials, seed=settings.seed, n=n, params=params)
            rows.append(validate_point(config, sigmas=args.sigmas, workers=settings.workers).as_row())
    emit(rows, VALIDATE_COLUMNS, settings.output_format, args.output,
         _meta("validate", settings, blocklengths=list(args.blocklengths), powers=list(args.powers),
               sigmas=args.sigmas),
         settings.precision)
    failed = sum(1 for row in rows if not row["passed"])
    if failed:
        logger.error(f"{failed} of {len(rows)} validation points failed")
        return EXIT_VALIDATION_FAILED
    return EXIT_OK


COMMANDS = {
    "rate": cmd_rate,
    "detect": cmd_detect,
    "design": cmd_design,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        if e.code is None:
            return EXIT_OK
        return e.code if isinstance(e.code, int) else EXIT_INVALID

    try:
        settings = settings_from_args(args)
        configure_logging(settings.log_level)
        return COMMANDS[args.command](args, settings)
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as e:
        logger.error(f"Solver did not converge: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    raise SystemExit(main())
