"""
Randomized agreement checks between closed-form corrections and their
saddle-point oracles.

Each suite draws its instances from a generator seeded with (seed, suite
index), so a suite's result does not depend on which other suites run or on
thread scheduling.
"""

from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.boundary.corrections import (
    BoundaryGeometry,
    CorrectionKind,
    corrected_value,
    kkt_value,
    make_stencil,
)
from src.boundary.multi import (
    ConstraintSet,
    MultiKind,
    kkt_multi_value,
    make_multi_stencil,
    multi_corrected_value,
)
from src.dg.basis import nodal_metric
from src.utils.logging import get_logger
from src.utils.parallel import ordered_map

logger = get_logger(__name__)

MAX_SINGLE_DEGREE = 6
MAX_MULTI_BASIS = 9
DEFAULT_THRESHOLD = 1e-10
MAX_CONSTRAINT_CONDITION = 1e3


class SuiteResult(BaseModel):
    """Largest relative deviation seen by one suite."""

    name: str
    instances: int
    max_deviation: float


class EquivalenceReport(BaseModel):
    """Outcome of the whole equivalence suite."""

    seed: int
    instances: int
    suites: List[SuiteResult] = Field(default_factory=list)

    @property
    def max_deviation(self) -> float:
        """Largest deviation over every suite."""
        return max((suite.max_deviation for suite in self.suites), default=0.0)

    def passed(self, threshold: float = DEFAULT_THRESHOLD) -> bool:
        """Whether every suite stays within ``threshold``."""
        return self.max_deviation <= threshold

    def by_name(self) -> Dict[str, float]:
        """Suite name to max deviation."""
        return {suite.name: suite.max_deviation for suite in self.suites}


def random_spd(rng: np.random.Generator, size: int) -> np.ndarray:
    """Well-conditioned random SPD matrix."""
    factor = rng.standard_normal((size, size))
    return factor.T @ factor + size * np.eye(size)


def _nonzero_distance(rng: np.random.Generator) -> float:
    d = 0.0
    while abs(d) < 1e-6:
        d = float(rng.uniform(-1.0, 1.0))
    return d


def _single_suite(kind: CorrectionKind) -> Callable[[np.random.Generator, int], float]:
    def run(rng: np.random.Generator, instances: int) -> float:
        worst = 0.0
        for _ in range(instances):
            p = int(rng.integers(0, MAX_SINGLE_DEGREE + 1))
            dx = float(rng.uniform(0.1, 2.0))
            geometry = BoundaryGeometry.from_normalized(0.0, _nonzero_distance(rng), dx)
            weight = random_spd(rng, p + 1) if kind == CorrectionKind.ROD_W else None
            u = rng.standard_normal(p + 1)
            u_dirichlet = float(rng.standard_normal())

            closed = corrected_value(make_stencil(kind, p, geometry, weight), u, u_dirichlet)
            oracle = kkt_value(kind, p, geometry, u, u_dirichlet, weight)
            scale = 1.0 + abs(u_dirichlet) + float(np.linalg.norm(u))
            worst = max(worst, abs(closed - oracle) / scale)
        return worst

    return run


def _constraint_matrix(rng: np.random.Generator, size: int, count: int) -> np.ndarray:
    # Redraw the rare near-singular Gaussian matrices.
    while True:
        evaluations = rng.standard_normal((size, count))
        if np.linalg.cond(evaluations) <= MAX_CONSTRAINT_CONDITION:
            return evaluations


def _multi_suite(kind: MultiKind) -> Callable[[np.random.Generator, int], float]:
    def run(rng: np.random.Generator, instances: int) -> float:
        worst = 0.0
        for _ in range(instances):
            size = int(rng.integers(1, MAX_MULTI_BASIS + 1))
            count = int(rng.integers(1, size + 1))
            constraints = ConstraintSet(
                evaluations=_constraint_matrix(rng, size, count),
                dirichlet=rng.standard_normal(count),
                target=rng.standard_normal(size),
            )
            if kind == MultiKind.E:
                metric = None
            elif kind == MultiKind.L2:
                metric = np.diag(rng.uniform(0.05, 1.0, size))
            else:
                metric = random_spd(rng, size)
            u = rng.standard_normal(size)

            stencil = make_multi_stencil(kind, constraints, metric)
            closed = multi_corrected_value(stencil, u, constraints.dirichlet)
            oracle = kkt_multi_value(kind, constraints, u, metric)
            scale = (
                1.0
                + float(np.linalg.norm(constraints.dirichlet))
                + float(np.linalg.norm(u))
            )
            worst = max(worst, abs(closed - oracle) / scale)
        return worst

    return run


def _reduction_suite(rng: np.random.Generator, instances: int) -> float:
    # K = 1 must reproduce the single-constraint stencil.
    worst = 0.0
    for _ in range(instances):
        p = int(rng.integers(0, MAX_SINGLE_DEGREE + 1))
        geometry = BoundaryGeometry.from_normalized(0.0, _nonzero_distance(rng), 1.0)
        single = make_stencil(CorrectionKind.ROD_E, p, geometry)
        multi = make_multi_stencil(
            MultiKind.W, ConstraintSet.single(p, geometry, 0.0), nodal_metric(p)
        )
        worst = max(
            worst,
            abs(float(multi.alpha[0]) - single.alpha),
            float(np.max(np.abs(multi.modified_basis - single.modified_basis))),
        )
    return worst


SUITES: List[Tuple[str, Callable[[np.random.Generator, int], float]]] = [
    ("rod-e", _single_suite(CorrectionKind.ROD_E)),
    ("rod-l2", _single_suite(CorrectionKind.ROD_L2)),
    ("rod-w", _single_suite(CorrectionKind.ROD_W)),
    ("multi-e", _multi_suite(MultiKind.E)),
    ("multi-l2", _multi_suite(MultiKind.L2)),
    ("multi-w", _multi_suite(MultiKind.W)),
    ("multi-reduction", _reduction_suite),
]


def run_equivalence_suite(
    seed: int, instances: int = 100, threads: Optional[int] = None
) -> EquivalenceReport:
    """
    Compare every closed-form correction with its saddle-point oracle.

    Args:
        seed: Seed of the random instances
        instances: Instances per suite
        threads: Worker threads

    Returns:
        Per-suite maximum deviations
    """

    def run(indexed: Tuple[int, Tuple[str, Callable]]) -> SuiteResult:
        index, (name, suite) = indexed
        rng = np.random.default_rng([seed, index])
        deviation = suite(rng, instances)
        logger.debug("Suite %s: max deviation %.3e", name, deviation)
        return SuiteResult(name=name, instances=instances, max_deviation=deviation)

    results = ordered_map(run, list(enumerate(SUITES)), threads)
    report = EquivalenceReport(seed=seed, instances=instances, suites=results)
    logger.info("Equivalence suite (seed %d): max deviation %.3e", seed, report.max_deviation)
    return report
