"""
Eigenspectrum engine of the semi-discrete operator A = M^-1 K.

Explicit stepping of order q multiplies an eigenmode by the truncated
exponential sum_{k<=q} mu^k / k! with mu = lambda dt; implicit Euler applies
(I - dt A)^-1. The analysed system has Dx = 1 and, by default, two cells.

The embedded operator is block lower bidiagonal, so its spectrum is the
union of the boundary-cell block spectrum and the (repeated) interior block
spectrum. Classification works on those blocks.
"""

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.boundary.corrections import BoundaryGeometry, CorrectionKind, make_stencil
from src.dg.operator import MeshSpec, assemble_embedded, assemble_periodic
from src.utils.errors import (
    EigenSolverError,
    ErrorCode,
    ErrorDetail,
    ValidationError,
)
from src.utils.logging import get_logger

logger = get_logger(__name__)

AMPLIFICATION_TOLERANCE = 1e-8
CFL_BISECTION_LOWER = 1e-4
CFL_BISECTION_UPPER = 2.0
CFL_BISECTION_TOLERANCE = 1e-6
MAX_DENSE_SIZE = 512


class Integrator(str, Enum):
    """Time integrator."""

    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class StabilityVerdict:
    """Classification of one (d, CFL) configuration."""

    stable: bool
    max_amplification: float
    worst_eigenvalue: complex
    max_re_lambda: float
    p: int
    kind: CorrectionKind
    integrator: Integrator
    d: float
    cfl: float


@dataclass(frozen=True)
class EmbeddedSpectrum:
    """
    Diagonal blocks of the embedded A and their eigenvalues.

    Attributes:
        boundary_block: Cell-1 block of A (depends on kind and d)
        interior_block: Block shared by cells 2..Ne
        boundary_eigenvalues: Eigenvalues of boundary_block
        interior_eigenvalues: Eigenvalues of interior_block
        cells: Number of cells of the analysed system
    """

    boundary_block: np.ndarray
    interior_block: np.ndarray
    boundary_eigenvalues: np.ndarray
    interior_eigenvalues: np.ndarray
    cells: int

    @property
    def eigenvalues(self) -> np.ndarray:
        """Full spectrum with multiplicities, sorted."""
        repeated = np.tile(self.interior_eigenvalues, self.cells - 1)
        return np.sort_complex(np.concatenate([self.boundary_eigenvalues, repeated]))

    @property
    def max_real(self) -> float:
        """Largest real part over the spectrum."""
        return float(
            max(
                np.max(self.boundary_eigenvalues.real),
                np.max(self.interior_eigenvalues.real),
            )
        )


def eigenvalues_dense(matrix: np.ndarray, validate: bool = True) -> np.ndarray:
    """
    Eigenvalues of a dense real matrix, sorted by (real, imaginary) part.

    LAPACK geev balances, reduces to Hessenberg form and runs shifted QR.
    With ``validate`` the sum of the eigenvalues is checked against the
    trace and, for well-conditioned matrices, their product against the LU
    determinant.

    Args:
        matrix: Square real matrix
        validate: Run the trace/determinant checks

    Returns:
        Complex eigenvalues

    Raises:
        ValidationError: If the matrix is not square or too large
        EigenSolverError: If LAPACK fails or a check does not hold
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(
            f"Expected a square matrix, got shape {matrix.shape}",
            code=ErrorCode.INVALID_ARGUMENT,
        )
    size = matrix.shape[0]
    if size > MAX_DENSE_SIZE:
        raise ValidationError(
            f"Dense eigenvalues limited to n <= {MAX_DENSE_SIZE}, got {size}",
            code=ErrorCode.INVALID_ARGUMENT,
        )

    try:
        values = np.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as e:
        raise EigenSolverError(f"Eigenvalue iteration did not converge: {e}")
    if not np.all(np.isfinite(values)):
        raise EigenSolverError("Eigensolver returned non-finite values")

    values = np.sort_complex(values.astype(complex))
    if validate:
        _validate_spectrum(matrix, values)
    return values


def _validate_spectrum(matrix: np.ndarray, values: np.ndarray) -> None:
    size = matrix.shape[0]
    norm = float(np.linalg.norm(matrix))

    trace_gap = abs(complex(np.sum(values)) - float(np.trace(matrix)))
    if trace_gap > 1e-9 * norm:
        raise EigenSolverError(
            f"Eigenvalue sum misses the trace by {trace_gap:.3e}",
            details=[ErrorDetail(param="trace", value=trace_gap, message="sum check")],
        )

    # The product test is meaningful only when det is well conditioned.
    condition = np.linalg.cond(matrix)
    if not np.isfinite(condition) or size * condition * np.finfo(float).eps > 1e-9:
        logger.debug("Skipping determinant check (condition number %.3e)", condition)
        return
    lu, pivots = linalg.lu_factor(matrix, check_finite=False)
    swaps = np.count_nonzero(pivots != np.arange(size))
    determinant = (-1.0) ** swaps * float(np.prod(np.diag(lu)))
    product = complex(np.prod(values))
    if abs(product - determinant) > 1e-8 * abs(determinant):
        raise EigenSolverError(
            f"Eigenvalue product {product} disagrees with det {determinant}",
            details=[ErrorDetail(param="det", value=determinant, message="product check")],
        )


def amplification(mu, q: int):
    """
    Modulus of the degree-q truncated exponential, |sum_{k=0}^{q} mu^k / k!|.

    Args:
        mu: Scalar or array of complex numbers lambda * dt
        q: Truncation order (p + 1 for explicit DeC analysis)

    Returns:
        Float or array of moduli
    """
    if q < 0:
        raise ValidationError(
            f"Order must be non-negative, got {q}", code=ErrorCode.INVALID_ARGUMENT
        )
    mu = np.asarray(mu, dtype=complex)
    total = np.ones_like(mu)
    for k in range(q, 0, -1):
        total = 1.0 + total * mu / k
    result = np.abs(total)
    return float(result) if result.ndim == 0 else result


def implicit_spectral_radius(matrix: np.ndarray, dt: float) -> float:
    """
    Spectral radius of the implicit Euler update (I - dt A)^-1.

    Args:
        matrix: Semi-discrete matrix A
        dt: Time step

    Returns:
        Spectral radius, inf if I - dt A is singular
    """
    size = matrix.shape[0]
    lu, pivots = linalg.lu_factor(np.eye(size) - dt * matrix, check_finite=False)
    if np.any(np.diag(lu) == 0.0):
        return math.inf
    update = linalg.lu_solve((lu, pivots), np.eye(size), check_finite=False)
    return float(np.max(np.abs(eigenvalues_dense(update, validate=False))))


def periodic_matrix(p: int, cells: int = 2) -> np.ndarray:
    """Semi-discrete periodic matrix on cells of unit length."""
    return assemble_periodic(p, MeshSpec(cells, 0.0, float(cells))).semidiscrete_matrix()


@lru_cache(maxsize=None)
def _periodic_eigenvalues(p: int, cells: int) -> np.ndarray:
    values = eigenvalues_dense(periodic_matrix(p, cells))
    values.setflags(write=False)
    return values


def periodic_max_amplification(p: int, cfl: float, cells: int = 2) -> float:
    """Max DeC(p + 1) amplification of the periodic operator at dt = cfl."""
    return float(np.max(amplification(_periodic_eigenvalues(p, cells) * cfl, p + 1)))


def periodic_amplification_curve(
    p: int, cfl_values: Sequence[float], cells: int = 2
) -> List[Tuple[float, float]]:
    """
    Max periodic amplification for each Dt/Dx in ``cfl_values``.

    Args:
        p: Polynomial degree
        cfl_values: Un-normalized Courant numbers
        cells: Number of periodic cells

    Returns:
        (cfl, max amplification) pairs in input order
    """
    return [(float(c), periodic_max_amplification(p, c, cells)) for c in cfl_values]


@lru_cache(maxsize=None)
def periodic_cfl_max(p: int, tolerance: float = CFL_BISECTION_TOLERANCE, cells: int = 2) -> float:
    """
    Largest stable Dt/Dx of DeC(p + 1) on the periodic operator.

    Bisection on [1e-4, 2]; the result is the stable end of the final
    bracket.

    Args:
        p: Polynomial degree
        tolerance: Bracket width at which bisection stops
        cells: Number of periodic cells

    Returns:
        CFL^p_max
    """

    def stable(c: float) -> bool:
        return periodic_max_amplification(p, c, cells) <= 1.0 + AMPLIFICATION_TOLERANCE

    low, high = CFL_BISECTION_LOWER, CFL_BISECTION_UPPER
    if not stable(low):
        raise EigenSolverError(f"Periodic P{p} operator unstable at CFL {low}")
    if stable(high):
        logger.warning("Periodic P%d operator stable up to CFL %g", p, high)
        return high

    while high - low > tolerance:
        middle = 0.5 * (low + high)
        if stable(middle):
            low = middle
        else:
            high = middle

    if not (stable(low - 1e-5) and not stable(low + 1e-5)):
        logger.warning("Periodic P%d stability is not monotone near CFL %.6g", p, low)
    logger.debug("CFL max for P%d: %.8f", p, low)
    return low


def embedded_operator_matrix(
    p: int,
    kind: CorrectionKind,
    d: float,
    cells: int = 2,
    weight: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Homogeneous embedded A on unit cells, the real boundary at x = d.

    Args:
        p: Polynomial degree
        kind: Boundary treatment
        d: Signed distance in units of Dx
        cells: Number of cells
        weight: Weight matrix for ROD_W

    Returns:
        Dense semi-discrete matrix
    """
    mesh = MeshSpec(cells, 0.0, float(cells))
    stencil = make_stencil(kind, p, BoundaryGeometry(0.0, d, 1.0), weight)
    return assemble_embedded(p, mesh, stencil, 0.0).semidiscrete_matrix()


@lru_cache(maxsize=None)
def _interior_block(p: int) -> Tuple[np.ndarray, np.ndarray]:
    # Cells 2..Ne do not depend on the boundary treatment.
    block = periodic_matrix(p, 2)[p + 1 :, p + 1 :]
    values = eigenvalues_dense(block)
    block.setflags(write=False)
    values.setflags(write=False)
    return block, values


def embedded_spectrum(
    p: int,
    kind: CorrectionKind,
    d: float,
    cells: int = 2,
    weight: Optional[np.ndarray] = None,
) -> EmbeddedSpectrum:
    """
    Block spectrum of the embedded operator.

    Args:
        p: Polynomial degree
        kind: Boundary treatment
        d: Signed distance in units of Dx
        cells: Number of cells (>= 2)
        weight: Weight matrix for ROD_W

    Returns:
        Boundary and interior blocks with their eigenvalues
    """
    if cells < 2:
        raise ValidationError(
            f"cells must be at least 2, got {cells}", code=ErrorCode.INVALID_ARGUMENT
        )
    size = p + 1
    matrix = embedded_operator_matrix(p, kind, d, 2, weight)
    boundary = matrix[:size, :size]
    interior, interior_values = _interior_block(p)
    return EmbeddedSpectrum(
        boundary_block=boundary,
        interior_block=interior,
        boundary_eigenvalues=eigenvalues_dense(boundary),
        interior_eigenvalues=interior_values,
        cells=cells,
    )


def boundary_block_eigenvalues(
    p: int, kind: CorrectionKind, d: float, weight: Optional[np.ndarray] = None
) -> np.ndarray:
    """Eigenvalues of the boundary-cell block of A (Dx = 1)."""
    return embedded_spectrum(p, kind, d, 2, weight).boundary_eigenvalues


def semidiscrete_max_real(
    p: int,
    kind: CorrectionKind,
    d: float,
    cells: int = 2,
    weight: Optional[np.ndarray] = None,
) -> float:
    """
    Largest real part over the spectrum of the embedded M^-1 K.

    Args:
        p: Polynomial degree
        kind: Boundary treatment
        d: Signed distance in units of Dx, |d| <= 1
        cells: Number of cells
        weight: Weight matrix for ROD_W

    Returns:
        max Re(lambda)
    """
    return embedded_spectrum(p, kind, d, cells, weight).max_real


def classify_spectrum(
    spectrum: EmbeddedSpectrum,
    p: int,
    kind: CorrectionKind,
    integrator: Integrator,
    d: float,
    cfl: float,
    tolerance: float = AMPLIFICATION_TOLERANCE,
    cfl_tolerance: float = CFL_BISECTION_TOLERANCE,
) -> StabilityVerdict:
    """
    Classify one CFL value against a precomputed spectrum.

    Args:
        spectrum: Embedded block spectrum
        p: Polynomial degree
        kind: Boundary treatment
        integrator: Time integrator
        d: Signed distance (reported only)
        cfl: Normalized CFL
        tolerance: Amplification slack above 1
        cfl_tolerance: Bisection tolerance of the periodic CFL calibration

    Returns:
        Verdict
    """
    integrator = Integrator(integrator)
    if cfl <= 0:
        raise ValidationError(f"CFL must be positive, got {cfl}", code=ErrorCode.INVALID_ARGUMENT)
    dt = cfl * periodic_cfl_max(p, cfl_tolerance)
    eigenvalues = spectrum.eigenvalues

    if integrator == Integrator.EXPLICIT:
        factors = amplification(eigenvalues * dt, p + 1)
        worst = int(np.argmax(factors))
        max_amplification = float(factors[worst])
    else:
        with np.errstate(divide="ignore"):
            factors = np.abs(1.0 / (1.0 - dt * eigenvalues))
        worst = int(np.argmax(factors))
        max_amplification = max(
            implicit_spectral_radius(spectrum.boundary_block, dt),
            implicit_spectral_radius(spectrum.interior_block, dt),
        )

    return StabilityVerdict(
        stable=bool(max_amplification <= 1.0 + tolerance),
        max_amplification=max_amplification,
        worst_eigenvalue=complex(eigenvalues[worst]),
        max_re_lambda=spectrum.max_real,
        p=p,
        kind=CorrectionKind(kind),
        integrator=integrator,
        d=d,
        cfl=cfl,
    )


def classify(
    p: int,
    kind: CorrectionKind,
    integrator: Integrator,
    d: float,
    cfl: float,
    cells: int = 2,
    weight: Optional[np.ndarray] = None,
    tolerance: float = AMPLIFICATION_TOLERANCE,
    cfl_tolerance: float = CFL_BISECTION_TOLERANCE,
) -> StabilityVerdict:
    """
    Stability verdict for one (d, normalized CFL) node.

    dt = cfl * CFL^p_max * Dx with Dx = 1.

    Args:
        p: Polynomial degree
        kind: Boundary treatment
        integrator: EXPLICIT for DeC(p + 1), IMPLICIT for implicit Euler
        d: Signed distance in units of Dx
        cfl: Normalized CFL
        cells: Number of cells of the analysed system
        weight: Weight matrix for ROD_W
        tolerance: Amplification slack above 1
        cfl_tolerance: Bisection tolerance of the periodic CFL calibration

    Returns:
        Verdict
    """
    spectrum = embedded_spectrum(p, kind, d, cells, weight)
    return classify_spectrum(spectrum, p, kind, integrator, d, cfl, tolerance, cfl_tolerance)


def p1_rod_eigs_analytic(kind: CorrectionKind, d: float) -> Tuple[complex, complex]:
    """
    Closed-form eigenvalues of the P1 boundary block (Dx = 1).

    Args:
        kind: ROD_E or ROD_L2
        d: Signed distance

    Returns:
        (lambda_+, lambda_-)
    """
    kind = CorrectionKind(kind)
    if kind == CorrectionKind.ROD_E:
        denominator = 2.0 * d**2 - 2.0 * d + 1.0
        center = -3.0 * d**2 + 5.0 * d - 2.0
        radicand = 9.0 * d**4 - 18.0 * d**3 + 13.0 * d**2 - 2.0 * d - 2.0
    elif kind == CorrectionKind.ROD_L2:
        gap = 2.0 - 3.0 * d
        denominator = 2.0 * (3.0 * d**2 - 3.0 * d + 1.0)
        center = -(gap**2)
        radicand = gap**4 - 6.0 * gap * denominator
    else:
        raise ValidationError(
            f"No closed form for {kind.value}", code=ErrorCode.INVALID_ARGUMENT
        )
    root = cmath.sqrt(radicand)
    return (center + root) / denominator, (center - root) / denominator


def find_distance_threshold(
    p: int,
    kind: CorrectionKind,
    low: float,
    high: float,
    tolerance: float = 1e-7,
    weight: Optional[np.ndarray] = None,
) -> float:
    """
    Distance where the semi-discrete operator loses stability.

    Bisection on max Re(lambda) over a bracket with a sign change.

    Args:
        p: Polynomial degree
        kind: Boundary treatment
        low: Bracket end with max Re(lambda) <= 0
        high: Bracket end with max Re(lambda) > 0
        tolerance: Bracket width at which bisection stops
        weight: Weight matrix for ROD_W

    Returns:
        Midpoint of the final bracket

    Raises:
        ValidationError: If the bracket holds no sign change
    """

    def unstable(d: float) -> bool:
        return semidiscrete_max_real(p, kind, d, weight=weight) > 0.0

    if unstable(low) or not unstable(high):
        raise ValidationError(
            f"No stability change of P{p} {CorrectionKind(kind).value} on [{low}, {high}]",
            code=ErrorCode.INVALID_ARGUMENT,
        )
    while abs(high - low) > tolerance:
        middle = 0.5 * (low + high)
        if unstable(middle):
            high = middle
        else:
            low = middle
    return 0.5 * (low + high)
