#!/usr/bin/env python3
"""
Embedded-boundary DG toolkit - Main Entry Point

Command-line front end of the stability analysis, convergence runs and
equivalence checks. Results go to stdout or to --out; logs go to stderr.

Exit codes: 0 success, 1 invalid input, 2 unstable run, 3 numerical failure.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pydantic
import yaml

from src.boundary.corrections import CorrectionKind
from src.config.config import AppConfig, RunConfig, load_config, load_config_from_env
from src.reporting.formatter import (
    amplification_curve_csv,
    convergence_csv,
    eigenvalue_lines,
    equivalence_lines,
    map_csv,
    map_svg,
    periodic_cfl_table,
    write_text,
)
from src.solver.manufactured import convergence_study, default_meshes
from src.stability.maps import stability_map
from src.stability.spectrum import (
    Integrator,
    eigenvalues_dense,
    embedded_operator_matrix,
    periodic_amplification_curve,
    periodic_cfl_max,
    periodic_matrix,
)
from src.utils.environment import load_env_file
from src.utils.errors import (
    ErrorCode,
    ExitCode,
    NumericalError,
    ValidationError,
    exit_code_for,
    report_error,
)
from src.utils.logging import configure_logging, get_logger
from src.verification.equivalence import run_equivalence_suite

DEFAULT_CONFIG_PATH = "config/config.yaml"
PERIODIC_TABLE_MAX_DEGREE = 6
CURVE_STEP = 0.01
CURVE_POINTS = 200

logger = get_logger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    """Parser reporting bad flags as validation errors instead of exiting."""

    def error(self, message: str):  # type: ignore[override]
        raise ValidationError(f"{self.prog}: {message}", code=ErrorCode.INVALID_ARGUMENT)


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, default=None, help="Polynomial degree")
    common.add_argument(
        "--method",
        choices=[kind.value for kind in CorrectionKind],
        default=CorrectionKind.ROD_E.value,
        help="Embedded boundary treatment",
    )
    common.add_argument(
        "--integrator",
        choices=[integrator.value for integrator in Integrator],
        default=Integrator.EXPLICIT.value,
        help="Time integrator",
    )
    common.add_argument("--d", type=float, default=None, help="Signed distance (units of dx)")
    common.add_argument("--cfl", type=float, default=1.0, help="Normalized CFL")
    common.add_argument("--cells", type=int, default=None, help="Number of cells")
    common.add_argument(
        "--cfl-hi", type=float, choices=[1.0, 10.0], default=None, help="CFL range of a map"
    )
    common.add_argument("--out", default=None, help="Output path (stdout if omitted)")
    common.add_argument("--format", choices=["csv", "svg"], default="csv", help="Map format")
    common.add_argument("--seed", type=int, default=0, help="Seed of randomized checks")
    common.add_argument("--threads", type=int, default=None, help="Worker threads (0: all cores)")
    common.add_argument("--weight", default=None, help="YAML file with the rod-w weight matrix")
    common.add_argument(
        "--meshes", type=int, nargs="+", default=None, help="Doubling cell counts"
    )
    common.add_argument("--config", "-c", default=None, help="Path to configuration file")
    common.add_argument(
        "--log-level",
        "-l",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=None,
        help="Logging level",
    )
    common.add_argument("--env-file", "-e", default=None, help="Path to .env file")
    return common


def build_parser() -> ArgumentParser:
    """Build the command-line parser."""
    parser = ArgumentParser(prog="rod-dg", description="Embedded-boundary DG toolkit")
    commands = parser.add_subparsers(dest="command", parser_class=ArgumentParser)
    commands.required = True
    common = _common_parser()

    periodic = commands.add_parser(
        "periodic-cfl", parents=[common], help="Table of the periodic CFL limits"
    )
    periodic.set_defaults(handler=command_periodic_cfl)

    eigen = commands.add_parser("eigen", parents=[common], help="Eigenvalues of M^-1 K")
    eigen.add_argument("--periodic", action="store_true", help="Use the periodic operator")
    eigen.set_defaults(handler=command_eigen)

    stability = commands.add_parser(
        "stability-map", parents=[common], help="Stability map over (d, CFL)"
    )
    stability.set_defaults(handler=command_stability_map)

    converge = commands.add_parser(
        "converge", parents=[common], help="Manufactured-solution convergence study"
    )
    converge.set_defaults(handler=command_converge)

    verify = commands.add_parser(
        "verify-equivalence", parents=[common], help="Closed form vs saddle-point checks"
    )
    verify.add_argument("--instances", type=int, default=100, help="Instances per suite")
    verify.set_defaults(handler=command_verify_equivalence)
    return parser


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


def _degree(args: argparse.Namespace, default: int = 1) -> int:
    p = default if args.p is None else args.p
    if not 0 <= p <= 12:
        raise ValidationError(f"--p must lie in [0, 12], got {p}", code=ErrorCode.INVALID_ARGUMENT)
    return p


def _distance(args: argparse.Namespace, default: float) -> float:
    d = default if args.d is None else args.d
    if not -1.0 <= d <= 1.0:
        raise ValidationError(f"--d must lie in [-1, 1], got {d}", code=ErrorCode.INVALID_ARGUMENT)
    return d


def _load_weight(args: argparse.Namespace) -> Optional[List[List[float]]]:
    if args.weight is None:
        if args.method == CorrectionKind.ROD_W.value:
            raise ValidationError("rod-w requires --weight", code=ErrorCode.INVALID_ARGUMENT)
        return None
    path = Path(args.weight)
    if not path.exists():
        raise ValidationError(f"Weight file not found: {path}", code=ErrorCode.INVALID_ARGUMENT)
    with open(path, "r") as file:
        data = yaml.safe_load(file)
    if isinstance(data, dict):
        data = data.get("weight")
    if not isinstance(data, list):
        raise ValidationError(f"{path} holds no weight matrix", code=ErrorCode.INVALID_ARGUMENT)
    return data


def _weight_array(args: argparse.Namespace) -> Optional[np.ndarray]:
    weight = _load_weight(args)
    return None if weight is None else np.asarray(weight, dtype=float)


def _cells(args: argparse.Namespace, config: AppConfig) -> int:
    cells = config.analysis.cells if args.cells is None else args.cells
    if cells < 2:
        raise ValidationError(
            f"--cells must be at least 2, got {cells}", code=ErrorCode.INVALID_ARGUMENT
        )
    return cells


def command_periodic_cfl(args: argparse.Namespace, config: AppConfig) -> int:
    """Print CFL^p_max for p = 0..P; --out also receives the amplification curves."""
    top = _degree(args, PERIODIC_TABLE_MAX_DEGREE)
    tolerance = config.analysis.cfl_bisection_tolerance
    rows = [(p, periodic_cfl_max(p, tolerance)) for p in range(top + 1)]
    sys.stdout.write(periodic_cfl_table(rows))
    if args.out:
        grid = [round(k * CURVE_STEP, 12) for k in range(1, CURVE_POINTS + 1)]
        curves = [(p, periodic_amplification_curve(p, grid)) for p in range(top + 1)]
        write_text(args.out, amplification_curve_csv(curves))
    return int(ExitCode.SUCCESS)


def command_eigen(args: argparse.Namespace, config: AppConfig) -> int:
    """Print the sorted spectrum of the chosen operator and its max real part."""
    p = _degree(args)
    cells = _cells(args, config)
    if args.periodic:
        matrix = periodic_matrix(p, cells)
    else:
        d = _distance(args, 0.0)
        kind = CorrectionKind(args.method)
        matrix = embedded_operator_matrix(p, kind, d, cells, _weight_array(args))
    eigenvalues = eigenvalues_dense(matrix)
    _emit(eigenvalue_lines(eigenvalues, float(np.max(eigenvalues.real))), args.out)
    return int(ExitCode.SUCCESS)


def command_stability_map(args: argparse.Namespace, config: AppConfig) -> int:
    """Write one panel of a stability-map family."""
    p = _degree(args)
    grid = config.map_grid
    if args.cfl_hi is not None:
        grid = grid.model_copy(update={"cfl_hi": args.cfl_hi})
    if args.format == "svg" and not args.out:
        raise ValidationError("--format svg requires --out", code=ErrorCode.INVALID_ARGUMENT)

    result = stability_map(
        p,
        CorrectionKind(args.method),
        Integrator(args.integrator),
        grid,
        cells=_cells(args, config),
        weight=_weight_array(args),
        threads=config.threads if args.threads is None else args.threads,
        tolerance=config.analysis.amplification_tolerance,
        cfl_tolerance=config.analysis.cfl_bisection_tolerance,
    )
    _emit(map_csv(result), args.out)
    if args.format == "svg":
        write_text(Path(args.out).with_suffix(".svg"), map_svg(result))
    return int(ExitCode.SUCCESS)


def command_converge(args: argparse.Namespace, config: AppConfig) -> int:
    """Write one convergence-table block; exit 2 if a mesh diverged."""
    p = _degree(args)
    try:
        base = RunConfig(
            p=p,
            method=args.method,
            integrator=args.integrator,
            d=_distance(args, -1.0),
            cfl=args.cfl,
            weight=_load_weight(args),
        )
    except pydantic.ValidationError as e:
        raise ValidationError(
            f"Invalid run configuration: {e}", code=ErrorCode.INVALID_CONFIGURATION
        )

    meshes = args.meshes or default_meshes(p)
    report = convergence_study(
        base, meshes, threads=config.threads if args.threads is None else args.threads
    )
    _emit(convergence_csv(report), args.out)
    return int(ExitCode.SUCCESS) if report.all_stable else int(ExitCode.UNSTABLE)


def command_verify_equivalence(args: argparse.Namespace, config: AppConfig) -> int:
    """Run the randomized equivalence suites and print the deviations."""
    if args.seed < 0:
        raise ValidationError("--seed must be non-negative", code=ErrorCode.INVALID_ARGUMENT)
    if args.instances < 1:
        raise ValidationError("--instances must be positive", code=ErrorCode.INVALID_ARGUMENT)
    report = run_equivalence_suite(
        args.seed,
        args.instances,
        threads=config.threads if args.threads is None else args.threads,
    )
    _emit(equivalence_lines(report), args.out)
    if not report.passed():
        raise NumericalError(
            f"Closed-form corrections deviate from the oracle by {report.max_deviation:.3e}"
        )
    return int(ExitCode.SUCCESS)


def _load_app_config(path: Optional[str]) -> AppConfig:
    try:
        if path is None:
            if not Path(DEFAULT_CONFIG_PATH).exists():
                return load_config_from_env()
            path = DEFAULT_CONFIG_PATH
        return load_config(path)
    except (FileNotFoundError, ValueError) as e:
        raise ValidationError(str(e), code=ErrorCode.INVALID_CONFIGURATION)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Application entry point.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Process exit code
    """
    try:
        args = build_parser().parse_args(argv)

        load_env_file(args.env_file)
        config = _load_app_config(args.config)
        configure_logging(
            config_path=config.logging.config_file,
            log_level=args.log_level or config.logging.level,
            log_file=config.logging.log_file,
        )
        logger.info("Running %s", args.command)
        return args.handler(args, config)
    except Exception as e:
        response = report_error(e)
        print(f"error [{response.code}]: {response.message}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
