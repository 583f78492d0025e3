"""
Stability maps over the (d, CFL) plane and the threshold searches built on them.
"""

from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

from src.boundary.corrections import CorrectionKind
from src.config.config import MapGridConfig
from src.stability.spectrum import (
    AMPLIFICATION_TOLERANCE,
    CFL_BISECTION_TOLERANCE,
    Integrator,
    StabilityVerdict,
    classify_spectrum,
    embedded_spectrum,
)
from src.utils.errors import ErrorCode, ValidationError
from src.utils.logging import get_logger
from src.utils.parallel import ordered_map

logger = get_logger(__name__)


@dataclass(frozen=True)
class StabilityMap:
    """
    Verdicts on a (d, CFL) grid, stored row-major (d outer, CFL inner).
    """

    p: int
    kind: CorrectionKind
    integrator: Integrator
    distances: List[float]
    cfls: List[float]
    verdicts: List[StabilityVerdict]

    @property
    def shape(self):
        """(number of distances, number of CFL values)."""
        return len(self.distances), len(self.cfls)

    def verdict(self, row: int, column: int) -> StabilityVerdict:
        """Verdict at distance index ``row`` and CFL index ``column``."""
        return self.verdicts[row * len(self.cfls) + column]

    def row(self, index: int) -> List[StabilityVerdict]:
        """All verdicts of one distance."""
        width = len(self.cfls)
        return self.verdicts[index * width : (index + 1) * width]

    def __iter__(self) -> Iterator[StabilityVerdict]:
        return iter(self.verdicts)

    def stable_mask(self) -> np.ndarray:
        """Boolean array of shape ``self.shape``."""
        return np.array([v.stable for v in self.verdicts], dtype=bool).reshape(self.shape)

    def all_stable(self, d_min: float, d_max: float) -> bool:
        """Whether every node with d_min <= d <= d_max is stable."""
        return all(v.stable for v in self.verdicts if d_min <= v.d <= d_max)


def stability_map(
    p: int,
    kind: CorrectionKind,
    integrator: Integrator,
    grid: Optional[MapGridConfig] = None,
    cells: int = 2,
    weight: Optional[np.ndarray] = None,
    threads: Optional[int] = None,
    tolerance: float = AMPLIFICATION_TOLERANCE,
    cfl_tolerance: float = CFL_BISECTION_TOLERANCE,
) -> StabilityMap:
    """
    Classify every node of a (d, CFL) grid.

    The spectrum depends on d only, so each row computes it once and sweeps
    the CFL axis. Rows run on a thread pool; ordering follows the grid.

    Args:
        p: Polynomial degree
        kind: Boundary treatment
        integrator: Time integrator
        grid: Grid specification (defaults to the full [-1, 1] x (0, 1] grid)
        cells: Number of cells of the analysed system
        weight: Weight matrix for ROD_W
        threads: Worker threads (None or 0 for all cores)
        tolerance: Amplification slack above 1
        cfl_tolerance: Bisection tolerance of the periodic CFL calibration

    Returns:
        Stability map
    """
    grid = grid or MapGridConfig()
    kind = CorrectionKind(kind)
    integrator = Integrator(integrator)
    distances = grid.distances()
    cfls = grid.cfls()
    logger.info(
        "Stability map P%d %s %s: %d x %d nodes",
        p,
        kind.value,
        integrator.value,
        len(distances),
        len(cfls),
    )

    def scan_row(d: float) -> List[StabilityVerdict]:
        spectrum = embedded_spectrum(p, kind, d, cells, weight)
        return [
            classify_spectrum(spectrum, p, kind, integrator, d, cfl, tolerance, cfl_tolerance)
            for cfl in cfls
        ]

    rows = ordered_map(scan_row, distances, threads)
    verdicts = [verdict for row in rows for verdict in row]
    logger.info(
        "Stability map done: %d/%d stable nodes",
        sum(v.stable for v in verdicts),
        len(verdicts),
    )
    return StabilityMap(
        p=p,
        kind=kind,
        integrator=integrator,
        distances=distances,
        cfls=cfls,
        verdicts=verdicts,
    )


def max_stable_distance(
    p: int,
    kind: CorrectionKind,
    integrator: Integrator,
    cfl: float,
    step: float = 0.005,
    cells: int = 2,
    weight: Optional[np.ndarray] = None,
) -> Optional[float]:
    """
    Furthest negative distance reachable from d = 0 through stable nodes.

    Walks d = 0, -step, ..., -1 at fixed CFL and stops at the first
    unstable node.

    Args:
        p: Polynomial degree
        kind: Boundary treatment
        integrator: Time integrator
        cfl: Normalized CFL
        step: Distance step
        cells: Number of cells of the analysed system
        weight: Weight matrix for ROD_W

    Returns:
        Most negative stable d, or None if d = 0 is already unstable
    """
    if step <= 0:
        raise ValidationError("step must be positive", code=ErrorCode.INVALID_ARGUMENT)
    best: Optional[float] = None
    count = int(round(1.0 / step))
    for k in range(count + 1):
        d = round(-k * step, 12)
        spectrum = embedded_spectrum(p, kind, d, cells, weight)
        if not classify_spectrum(spectrum, p, kind, integrator, d, cfl).stable:
            break
        best = d
    logger.debug("Max stable distance P%d %s at CFL %g: %s", p, kind, cfl, best)
    return best


def min_stable_cfl(
    p: int,
    kind: CorrectionKind,
    d: float,
    cfl_hi: float = 10.0,
    step: float = 0.1,
    integrator: Integrator = Integrator.IMPLICIT,
    cells: int = 2,
    weight: Optional[np.ndarray] = None,
) -> Optional[float]:
    """
    Smallest stable normalized CFL on the grid step, 2 step, ..., cfl_hi.

    Args:
        p: Polynomial degree
        kind: Boundary treatment
        d: Signed distance
        cfl_hi: Largest CFL tried
        step: CFL grid step
        integrator: Time integrator
        cells: Number of cells of the analysed system
        weight: Weight matrix for ROD_W

    Returns:
        Smallest stable CFL, None if no grid value is stable
    """
    if step <= 0 or cfl_hi < step:
        raise ValidationError(
            "Need 0 < step <= cfl_hi", code=ErrorCode.INVALID_ARGUMENT
        )
    spectrum = embedded_spectrum(p, kind, d, cells, weight)
    count = int(round(cfl_hi / step))
    for k in range(1, count + 1):
        cfl = round(k * step, 12)
        if classify_spectrum(spectrum, p, kind, integrator, d, cfl).stable:
            return cfl
    return None
