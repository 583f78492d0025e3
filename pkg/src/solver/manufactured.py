"""
Manufactured-solution runs and convergence studies.

The exact solution u(x) = 0.1 sin(pi x) is stationary for u_t + u_x = s with
s(x) = 0.1 pi cos(pi x). Runs start from its projection and march to the
discrete steady state, so the measured error is the spatial error alone.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.boundary.corrections import BoundaryGeometry, get_stencil
from src.config.config import RunConfig
from src.dg.operator import MeshSpec, assemble_embedded, l2_error, project_function
from src.solver.stepping import ExplicitStepper, ImplicitEulerStepper
from src.stability.spectrum import Integrator, classify, periodic_cfl_max
from src.utils.errors import ErrorCode, ErrorDetail, UnstableRunError, ValidationError
from src.utils.logging import get_logger
from src.utils.parallel import ordered_map

logger = get_logger(__name__)

AMPLITUDE = 0.1


def exact_solution(x):
    """Manufactured solution 0.1 sin(pi x)."""
    return AMPLITUDE * np.sin(np.pi * np.asarray(x, dtype=float))


def source_term(x):
    """Source 0.1 pi cos(pi x) balancing the advection of the exact solution."""
    return AMPLITUDE * np.pi * np.cos(np.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class RunResult:
    """Outcome of one manufactured-solution run."""

    l2_error: float
    steps: int
    residual: float
    converged: bool
    dt: float


@dataclass(frozen=True)
class ConvergenceRow:
    """One mesh of a convergence study."""

    cells: int
    l2_error: float
    eoa: Optional[float]
    steps: int
    residual: float
    stable: bool = True


@dataclass
class ConvergenceReport:
    """Per-mesh errors and estimated orders of accuracy."""

    config: RunConfig
    rows: List[ConvergenceRow] = field(default_factory=list)

    @property
    def errors(self) -> List[float]:
        """L2 error per mesh."""
        return [row.l2_error for row in self.rows]

    @property
    def orders(self) -> List[Optional[float]]:
        """EOA per mesh, None on the first mesh."""
        return [row.eoa for row in self.rows]

    @property
    def all_stable(self) -> bool:
        """Whether every run reached a bounded state."""
        return all(row.stable for row in self.rows)


def run_manufactured(config: RunConfig) -> RunResult:
    """
    March the embedded problem to its steady state and measure the L2 error.

    The real boundary is x_bar = x_left + d Dx and the datum is the exact
    solution there. A run stops when the max-norm increment drops to
    steady_tol (1 + ||u||_inf) or the step budget is spent.

    Args:
        config: Run configuration

    Returns:
        Error over [x_left, x_right], steps taken and final steady residual

    Raises:
        UnstableRunError: If ||u||_inf exceeds the divergence limit
    """
    p = config.p
    mesh = MeshSpec(config.cells, config.x_left, config.x_right)
    geometry = BoundaryGeometry.from_normalized(config.x_left, config.d, mesh.dx)
    weight = None if config.weight is None else np.asarray(config.weight, dtype=float)
    stencil = get_stencil(config.method, p, geometry, weight)
    u_dirichlet = float(exact_solution(geometry.real_point))
    operator = assemble_embedded(p, mesh, stencil, u_dirichlet, source_term)

    dt = config.cfl * periodic_cfl_max(p) * mesh.dx
    if config.integrator == Integrator.EXPLICIT:
        stepper = ExplicitStepper(operator, dt)
    else:
        stepper = ImplicitEulerStepper(operator, dt)

    logger.info(
        "Run P%d %s %s Ne=%d d=%g cfl=%g (dt=%.6g)",
        p,
        config.method.value,
        config.integrator.value,
        config.cells,
        config.d,
        config.cfl,
        dt,
    )

    u = project_function(exact_solution, p, mesh)
    budget = config.step_budget
    converged = False
    steps = 0
    for steps in range(1, budget + 1):
        delta = stepper.increment(u)
        u = u + delta
        size = float(np.max(np.abs(u)))
        if not math.isfinite(size) or size > config.divergence_limit:
            raise _divergence(config, steps, size)
        if float(np.max(np.abs(delta))) <= config.steady_tol * (1.0 + size):
            converged = True
            break

    if not converged:
        logger.warning("Run hit the step budget of %d without reaching steady state", budget)

    residual = float(
        np.max(np.abs(operator.semidiscrete_matrix() @ u + operator.affine_term()))
    )
    error = l2_error(u, exact_solution, p, mesh)
    logger.info("Run finished after %d steps: L2 error %.3e", steps, error)
    return RunResult(
        l2_error=error, steps=steps, residual=residual, converged=converged, dt=dt
    )


def _divergence(config: RunConfig, steps: int, size: float) -> UnstableRunError:
    weight = None if config.weight is None else np.asarray(config.weight, dtype=float)
    verdict = classify(
        config.p, config.method, config.integrator, config.d, config.cfl, weight=weight
    )
    if verdict.stable:
        logger.warning(
            "Run diverged although the two-cell analysis predicts stability "
            "(max amplification %.6g)",
            verdict.max_amplification,
        )
    return UnstableRunError(
        f"Run diverged after {steps} steps (||u||_inf = {size:.3e})",
        details=[
            ErrorDetail(param="steps", value=steps, message="steps before divergence"),
            ErrorDetail(
                param="analysis_stable",
                value=verdict.stable,
                message=f"max amplification {verdict.max_amplification:.6g}",
            ),
        ],
        steps=steps,
    )


def _check_doubling(meshes: Sequence[int]) -> None:
    if not meshes:
        raise ValidationError("At least one mesh is required", code=ErrorCode.INVALID_ARGUMENT)
    for coarse, fine in zip(meshes, meshes[1:]):
        if fine != 2 * coarse:
            raise ValidationError(
                f"Meshes must double: {coarse} is followed by {fine}",
                code=ErrorCode.INVALID_ARGUMENT,
            )


def convergence_study(
    base: RunConfig, meshes: Sequence[int], threads: Optional[int] = None
) -> ConvergenceReport:
    """
    Run the manufactured problem on doubling meshes.

    Unstable runs are kept as rows with stable=False and NaN error.

    Args:
        base: Configuration shared by every mesh (its ``cells`` is ignored)
        meshes: Strictly doubling cell counts
        threads: Worker threads for concurrent runs

    Returns:
        Report in mesh order
    """
    meshes = list(meshes)
    _check_doubling(meshes)

    def run(cells: int) -> ConvergenceRow:
        config = base.model_copy(update={"cells": cells})
        try:
            result = run_manufactured(config)
        except UnstableRunError as e:
            logger.warning("Ne=%d: %s", cells, e.message)
            return ConvergenceRow(
                cells=cells,
                l2_error=math.nan,
                eoa=None,
                steps=e.steps or 0,
                residual=math.nan,
                stable=False,
            )
        return ConvergenceRow(
            cells=cells,
            l2_error=result.l2_error,
            eoa=None,
            steps=result.steps,
            residual=result.residual,
        )

    rows = ordered_map(run, meshes, threads)

    report = ConvergenceReport(config=base)
    previous: Optional[ConvergenceRow] = None
    for row in rows:
        eoa = None
        if previous is not None:
            if row.stable and previous.stable and row.l2_error > 0:
                eoa = math.log2(previous.l2_error / row.l2_error)
            else:
                eoa = math.nan
        report.rows.append(
            ConvergenceRow(
                cells=row.cells,
                l2_error=row.l2_error,
                eoa=eoa,
                steps=row.steps,
                residual=row.residual,
                stable=row.stable,
            )
        )
        previous = row
    return report


def default_meshes(p: int) -> List[int]:
    """Mesh sequence of the convergence tables: 20..160 up to P3, 5..40 above."""
    return [20, 40, 80, 160] if p <= 3 else [5, 10, 20, 40]
