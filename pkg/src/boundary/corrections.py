"""
Single-constraint embedded boundary corrections.

An embedded Dirichlet condition u(x_bar) = u_D is imposed on the surrogate
face x_tilde through the boundary value

    v_h(x_tilde) = modified_basis . u + alpha * u_D,
    modified_basis = phi(x_tilde) - alpha * phi(x_bar),

where u are the modal coefficients of the boundary cell. The shifted boundary
(SB) correction takes alpha = 1; the ROD corrections take the alpha that
makes v_h the polynomial closest to u_h among those matching u_D at x_bar.
ROD-E measures the distance as the Euclidean norm of the equispaced Lagrange
coefficients, that is with the metric V^T V of the equispaced Vandermonde
matrix. ROD-L2 uses the mass matrix and ROD-W a user weight. The saddle-point
solve of that minimization is kept here as an independent oracle.
"""

import threading
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from src.dg.basis import element_mass_matrix, legendre_eval, nodal_metric
from src.utils.errors import (
    ErrorCode,
    ErrorDetail,
    GeometryError,
    NumericalError,
    SingularSystemError,
    ValidationError,
)
from src.utils.logging import get_logger

logger = get_logger(__name__)

DEGENERATE_DENOMINATOR = 1e-10
KKT_RESIDUAL_TOLERANCE = 1e-11


class CorrectionKind(str, Enum):
    """Embedded boundary treatment."""

    SB = "sb"
    ROD_E = "rod-e"
    ROD_L2 = "rod-l2"
    ROD_W = "rod-w"


@dataclass(frozen=True)
class BoundaryGeometry:
    """
    Surrogate face, signed distance and cell length of the boundary cell.

    The real boundary is x_bar = x_tilde + d. A positive d puts the real
    boundary inside the first cell, a negative one outside it.
    """

    surrogate: float
    distance: float
    dx: float

    def __post_init__(self) -> None:
        if self.dx <= 0:
            raise GeometryError(
                f"Cell length must be positive, got {self.dx}",
                code=ErrorCode.GEOMETRY_ERROR,
            )
        if abs(self.distance) > self.dx * (1.0 + 1e-12):
            raise GeometryError(
                f"|d| = {abs(self.distance)} exceeds the cell length {self.dx}",
                details=[
                    ErrorDetail(param="d", value=self.distance, message="|d| <= dx required")
                ],
                code=ErrorCode.DISTANCE_OUT_OF_RANGE,
            )

    @classmethod
    def from_normalized(
        cls, surrogate: float, d_normalized: float, dx: float
    ) -> "BoundaryGeometry":
        """Build a geometry from a distance expressed in units of dx."""
        return cls(surrogate=surrogate, distance=d_normalized * dx, dx=dx)

    @property
    def real_point(self) -> float:
        """Physical boundary x_bar."""
        return self.surrogate + self.distance

    @property
    def reference_real_point(self) -> float:
        """x_bar in the reference coordinate of the boundary cell."""
        return -1.0 + 2.0 * self.distance / self.dx


@dataclass(frozen=True)
class CorrectionStencil:
    """Precomputed alpha and modified basis of one boundary treatment."""

    alpha: float
    modified_basis: np.ndarray
    kind: CorrectionKind
    geometry: BoundaryGeometry

    @property
    def degree(self) -> int:
        """Polynomial degree of the boundary cell."""
        return int(self.modified_basis.size) - 1


@dataclass(frozen=True)
class KktSolution:
    """Solution of the constrained minimization saddle-point system."""

    coefficients: np.ndarray
    multiplier: float
    residual: float


def boundary_values(p: int, geometry: BoundaryGeometry) -> Tuple[np.ndarray, np.ndarray]:
    """
    Basis values at the surrogate face and at the real boundary.

    Args:
        p: Polynomial degree
        geometry: Boundary geometry

    Returns:
        (phi(x_tilde), phi(x_bar))
    """
    return legendre_eval(p, -1.0), legendre_eval(p, geometry.reference_real_point)


def check_spd(matrix: np.ndarray, size: int, name: str = "W") -> Tuple[np.ndarray, bool]:
    """
    Validate a symmetric positive definite matrix by Cholesky factorization.

    Args:
        matrix: Candidate matrix
        size: Expected size
        name: Name used in error messages

    Returns:
        Cholesky factor as returned by scipy.linalg.cho_factor

    Raises:
        ValidationError: If the matrix has the wrong shape, is not symmetric,
            or is not positive definite
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != (size, size):
        raise ValidationError(
            f"{name} must be {size}x{size}, got shape {matrix.shape}",
            code=ErrorCode.INVALID_ARGUMENT,
        )
    scale = max(np.max(np.abs(matrix)), np.finfo(float).tiny)
    if np.max(np.abs(matrix - matrix.T)) > 1e-12 * scale:
        raise ValidationError(f"{name} is not symmetric", code=ErrorCode.NOT_SPD)
    try:
        return linalg.cho_factor(matrix)
    except linalg.LinAlgError as e:
        raise ValidationError(
            f"{name} is not positive definite: {e}", code=ErrorCode.NOT_SPD
        )


def _weighted_alpha(
    phi_tilde: np.ndarray, phi_bar: np.ndarray, weighted_bar: np.ndarray
) -> float:
    # weighted_bar = W^{-1} phi(x_bar)
    denominator = float(phi_bar @ weighted_bar)
    if abs(denominator) <= DEGENERATE_DENOMINATOR:
        raise NumericalError(
            f"Degenerate weight: phi(x_bar)^T W^-1 phi(x_bar) = {denominator:.3e}",
            code=ErrorCode.DEGENERATE_WEIGHT,
        )
    return float(phi_tilde @ weighted_bar) / denominator


def make_stencil(
    kind: CorrectionKind,
    p: int,
    geometry: BoundaryGeometry,
    weight: Optional[np.ndarray] = None,
) -> CorrectionStencil:
    """
    Build the correction stencil of a boundary treatment.

    Args:
        kind: Boundary treatment
        p: Polynomial degree of the boundary cell
        geometry: Boundary geometry
        weight: SPD weight matrix, required for ROD_W only

    Returns:
        Stencil with alpha and modified basis

    Raises:
        ValidationError: On a missing, unexpected or non-SPD weight matrix
    """
    kind = CorrectionKind(kind)
    if kind != CorrectionKind.ROD_W and weight is not None:
        raise ValidationError(
            f"A weight matrix is only accepted by {CorrectionKind.ROD_W.value}",
            code=ErrorCode.INVALID_ARGUMENT,
        )

    phi_tilde, phi_bar = boundary_values(p, geometry)

    if kind == CorrectionKind.SB:
        alpha = 1.0
    elif kind == CorrectionKind.ROD_E:
        factor = linalg.cho_factor(nodal_metric(p))
        alpha = _weighted_alpha(phi_tilde, phi_bar, linalg.cho_solve(factor, phi_bar))
    elif kind == CorrectionKind.ROD_L2:
        # Legendre mass matrix is diagonal, so M^-1 is explicit.
        inverse_mass = (2.0 * np.arange(p + 1) + 1.0) / geometry.dx
        alpha = _weighted_alpha(phi_tilde, phi_bar, inverse_mass * phi_bar)
    else:
        if weight is None:
            raise ValidationError(
                "rod-w requires a weight matrix", code=ErrorCode.INVALID_ARGUMENT
            )
        factor = check_spd(weight, p + 1)
        alpha = _weighted_alpha(phi_tilde, phi_bar, linalg.cho_solve(factor, phi_bar))

    return CorrectionStencil(
        alpha=alpha,
        modified_basis=phi_tilde - alpha * phi_bar,
        kind=kind,
        geometry=geometry,
    )


def make_stencil_from_inverse_weight(
    p: int, geometry: BoundaryGeometry, weight_inverse: np.ndarray
) -> CorrectionStencil:
    """
    Build a ROD-W stencil from W^{-1} directly.

    W^{-1} may be only semidefinite, as the SB projector of
    sb_weight_matrix is.

    Args:
        p: Polynomial degree
        geometry: Boundary geometry
        weight_inverse: Symmetric (p + 1) x (p + 1) matrix playing W^{-1}

    Returns:
        ROD-W stencil

    Raises:
        NumericalError: If phi(x_bar)^T W^-1 phi(x_bar) <= 1e-10
    """
    weight_inverse = np.asarray(weight_inverse, dtype=float)
    if weight_inverse.shape != (p + 1, p + 1):
        raise ValidationError(
            f"W^-1 must be {p + 1}x{p + 1}, got shape {weight_inverse.shape}",
            code=ErrorCode.INVALID_ARGUMENT,
        )
    phi_tilde, phi_bar = boundary_values(p, geometry)
    alpha = _weighted_alpha(phi_tilde, phi_bar, weight_inverse @ phi_bar)
    return CorrectionStencil(
        alpha=alpha,
        modified_basis=phi_tilde - alpha * phi_bar,
        kind=CorrectionKind.ROD_W,
        geometry=geometry,
    )


def corrected_value(stencil: CorrectionStencil, u: np.ndarray, u_dirichlet: float) -> float:
    """
    Boundary value v_h(x_tilde) imposed through the upwind flux.

    Args:
        stencil: Correction stencil
        u: Modal coefficients of the boundary cell
        u_dirichlet: Dirichlet datum at x_bar

    Returns:
        modified_basis . u + alpha * u_D
    """
    u = np.asarray(u, dtype=float)
    if u.shape != stencil.modified_basis.shape:
        raise ValidationError(
            f"Expected {stencil.modified_basis.size} coefficients, got shape {u.shape}",
            code=ErrorCode.INVALID_ARGUMENT,
        )
    return float(stencil.modified_basis @ u + stencil.alpha * u_dirichlet)


def sb_weight_matrix(p: int, geometry: BoundaryGeometry) -> np.ndarray:
    """
    W^{-1}_SB = I - delta delta^T / (delta^T delta), delta = phi(x_tilde) - phi(x_bar).

    ROD-W evaluated with this matrix reproduces the SB correction.

    Args:
        p: Polynomial degree
        geometry: Boundary geometry with d != 0

    Returns:
        Rank-deficient symmetric projector annihilating delta
    """
    phi_tilde, phi_bar = boundary_values(p, geometry)
    delta = phi_tilde - phi_bar
    norm_squared = float(delta @ delta)
    if norm_squared == 0.0:
        raise ValidationError(
            "The SB weight matrix is undefined for d = 0",
            code=ErrorCode.INVALID_ARGUMENT,
        )
    return np.eye(p + 1) - np.outer(delta, delta) / norm_squared


def _objective_matrix(
    kind: CorrectionKind, p: int, geometry: BoundaryGeometry, weight: Optional[np.ndarray]
) -> np.ndarray:
    kind = CorrectionKind(kind)
    if kind == CorrectionKind.ROD_E:
        return nodal_metric(p)
    if kind == CorrectionKind.ROD_L2:
        return element_mass_matrix(p, geometry.dx)
    if kind == CorrectionKind.ROD_W:
        if weight is None:
            raise ValidationError(
                "rod-w requires a weight matrix", code=ErrorCode.INVALID_ARGUMENT
            )
        check_spd(weight, p + 1)
        return np.asarray(weight, dtype=float)
    raise ValidationError(
        f"{kind.value} is not a minimization-based correction",
        code=ErrorCode.INVALID_ARGUMENT,
    )


def solve_saddle_point(
    objective: np.ndarray, constraints: np.ndarray, u: np.ndarray, data: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Solve [[W, C], [C^T, 0]] [v; lam] = [W u; data] by LU with partial pivoting.

    The constraint columns are scaled to unit norm before factorization and
    the residual is measured on the unscaled system.

    Args:
        objective: B x B matrix W
        constraints: B x K matrix C
        u: B-vector
        data: K-vector

    Returns:
        (v, lam, residual norm)

    Raises:
        SingularSystemError: On a singular matrix or a residual above
            1e-11 (||A|| ||x|| + ||rhs||)
    """
    size, count = constraints.shape
    scales = np.linalg.norm(constraints, axis=0)
    if np.any(scales == 0.0):
        raise SingularSystemError("A constraint column is identically zero")
    scaled = constraints / scales

    matrix = np.zeros((size + count, size + count))
    matrix[:size, :size] = objective
    matrix[:size, size:] = scaled
    matrix[size:, :size] = scaled.T
    rhs = np.concatenate([objective @ u, data / scales])

    lu, pivots = linalg.lu_factor(matrix, check_finite=False)
    if np.any(np.diag(lu) == 0.0):
        raise SingularSystemError("Saddle-point matrix is singular")
    solution = linalg.lu_solve((lu, pivots), rhs, check_finite=False)
    v = solution[:size]
    multipliers = solution[size:] / scales

    full = np.zeros_like(matrix)
    full[:size, :size] = objective
    full[:size, size:] = constraints
    full[size:, :size] = constraints.T
    full_solution = np.concatenate([v, multipliers])
    full_rhs = np.concatenate([objective @ u, data])
    residual = float(np.linalg.norm(full @ full_solution - full_rhs))
    scale = np.linalg.norm(full, 2) * np.linalg.norm(full_solution) + np.linalg.norm(full_rhs)
    if residual > KKT_RESIDUAL_TOLERANCE * scale:
        raise SingularSystemError(
            f"Saddle-point residual {residual:.3e} exceeds tolerance",
            details=[ErrorDetail(param="residual", value=residual, message="too large")],
        )
    return v, multipliers, residual


def kkt_solution(
    kind: CorrectionKind,
    p: int,
    geometry: BoundaryGeometry,
    u: np.ndarray,
    u_dirichlet: float,
    weight: Optional[np.ndarray] = None,
) -> KktSolution:
    """
    Solve the ROD minimization through its saddle-point system.

    Args:
        kind: ROD_E, ROD_L2 or ROD_W
        p: Polynomial degree
        geometry: Boundary geometry
        u: Modal coefficients of the boundary cell
        u_dirichlet: Dirichlet datum at x_bar
        weight: SPD weight matrix for ROD_W

    Returns:
        Minimizer coefficients v, Lagrange multiplier and residual
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (p + 1,):
        raise ValidationError(
            f"Expected {p + 1} coefficients, got shape {u.shape}",
            code=ErrorCode.INVALID_ARGUMENT,
        )
    objective = _objective_matrix(kind, p, geometry, weight)
    _, phi_bar = boundary_values(p, geometry)
    v, multipliers, residual = solve_saddle_point(
        objective, phi_bar[:, np.newaxis], u, np.array([u_dirichlet], dtype=float)
    )
    return KktSolution(coefficients=v, multiplier=float(multipliers[0]), residual=residual)


def kkt_value(
    kind: CorrectionKind,
    p: int,
    geometry: BoundaryGeometry,
    u: np.ndarray,
    u_dirichlet: float,
    weight: Optional[np.ndarray] = None,
) -> float:
    """
    Oracle boundary value: minimizer of the ROD problem evaluated at x_tilde.

    Args:
        kind: ROD_E, ROD_L2 or ROD_W
        p: Polynomial degree
        geometry: Boundary geometry
        u: Modal coefficients of the boundary cell
        u_dirichlet: Dirichlet datum at x_bar
        weight: SPD weight matrix for ROD_W

    Returns:
        phi(x_tilde) . v
    """
    solution = kkt_solution(kind, p, geometry, u, u_dirichlet, weight)
    phi_tilde, _ = boundary_values(p, geometry)
    return float(phi_tilde @ solution.coefficients)


class StencilCache:
    """
    Read-mostly cache of correction stencils.

    Stencils depend only on (kind, p, geometry, weight), so for a fixed
    boundary they are built once and shared.
    """

    def __init__(self) -> None:
        """Initialize an empty cache."""
        self._entries: Dict[tuple, CorrectionStencil] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def _key(
        kind: CorrectionKind, p: int, geometry: BoundaryGeometry, weight: Optional[np.ndarray]
    ) -> tuple:
        weight_key = None
        if weight is not None:
            weight_key = np.ascontiguousarray(weight, dtype=float).tobytes()
        return (CorrectionKind(kind).value, p, geometry, weight_key)

    def get_or_create(
        self,
        kind: CorrectionKind,
        p: int,
        geometry: BoundaryGeometry,
        weight: Optional[np.ndarray] = None,
    ) -> CorrectionStencil:
        """
        Return the cached stencil, building it on first use.

        Args:
            kind: Boundary treatment
            p: Polynomial degree
            geometry: Boundary geometry
            weight: SPD weight matrix for ROD_W

        Returns:
            Correction stencil
        """
        key = self._key(kind, p, geometry, weight)
        with self._lock:
            stencil = self._entries.get(key)
            if stencil is not None:
                self.hits += 1
                return stencil

        built = make_stencil(kind, p, geometry, weight)
        # Cached stencils are shared read-only.
        built.modified_basis.setflags(write=False)
        with self._lock:
            stencil = self._entries.get(key)
            if stencil is None:
                stencil = self._entries[key] = built
                self.misses += 1
            else:
                self.hits += 1
        logger.debug(
            "Cached %s stencil p=%d d=%g (alpha=%.6g)", kind, p, geometry.distance, stencil.alpha
        )
        return stencil

    def clear(self) -> None:
        """Drop every cached stencil."""
        with self._lock:
            self._entries.clear()

    def __len__(self) -> int:
        return len(self._entries)


_default_cache = StencilCache()


def get_stencil(
    kind: CorrectionKind,
    p: int,
    geometry: BoundaryGeometry,
    weight: Optional[np.ndarray] = None,
) -> CorrectionStencil:
    """Stencil from the process-wide cache."""
    return _default_cache.get_or_create(kind, p, geometry, weight)
