"""
Multi-constraint ROD corrections.

The boundary polynomial v is the one closest to u (in a metric W) among
those matching K Dirichlet data u_D(x_bar_k). With the evaluation matrix
Phi[j, k] = phi_j(x_bar_k) the value at the evaluation point is

    v(x_tilde) = (phi_tilde - Phi alpha) . u + alpha . u_D,
    alpha = (Phi^T W^-1 Phi)^-1 Phi^T W^-1 phi_tilde.

Callers supply Phi and phi_tilde, so the algebra is independent of the
basis and of the space dimension.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import linalg

from src.boundary.corrections import (
    BoundaryGeometry,
    boundary_values,
    check_spd,
    solve_saddle_point,
)
from src.utils.errors import (
    ErrorCode,
    ErrorDetail,
    NumericalError,
    RankDeficientError,
    SingularSystemError,
    ValidationError,
)

RANK_TOLERANCE = 1e-10
CONSTRAINT_TOLERANCE = 1e-10


class MultiKind(str, Enum):
    """Metric of the multi-constraint minimization."""

    E = "e"
    L2 = "l2"
    W = "w"


@dataclass(frozen=True)
class ConstraintSet:
    """
    Constraint evaluations, Dirichlet data and evaluation-point basis values.

    Attributes:
        evaluations: B x K matrix, column k holds the basis at x_bar_k
        dirichlet: K Dirichlet data
        target: Basis values at the evaluation point x_tilde
    """

    evaluations: np.ndarray
    dirichlet: np.ndarray
    target: np.ndarray

    def __post_init__(self) -> None:
        evaluations = np.atleast_2d(np.asarray(self.evaluations, dtype=float))
        dirichlet = np.atleast_1d(np.asarray(self.dirichlet, dtype=float))
        target = np.asarray(self.target, dtype=float)
        object.__setattr__(self, "evaluations", evaluations)
        object.__setattr__(self, "dirichlet", dirichlet)
        object.__setattr__(self, "target", target)

        size, count = evaluations.shape
        if target.shape != (size,):
            raise ValidationError(
                f"Target must hold {size} basis values, got shape {target.shape}",
                code=ErrorCode.INVALID_ARGUMENT,
            )
        if dirichlet.shape != (count,):
            raise ValidationError(
                f"Expected {count} Dirichlet data, got shape {dirichlet.shape}",
                code=ErrorCode.INVALID_ARGUMENT,
            )
        if count > size:
            raise ValidationError(
                f"{count} constraints exceed the basis size {size}",
                code=ErrorCode.INVALID_ARGUMENT,
            )

        singular_values = np.linalg.svd(evaluations, compute_uv=False)
        ratio = singular_values[-1] / singular_values[0] if singular_values[0] > 0 else 0.0
        if ratio <= RANK_TOLERANCE:
            raise RankDeficientError(
                f"Constraint evaluations are rank deficient "
                f"(singular value ratio {ratio:.3e})",
                details=[
                    ErrorDetail(
                        param="evaluations",
                        value=float(ratio),
                        message=f"smallest/largest singular value <= {RANK_TOLERANCE}",
                    )
                ],
            )

    @property
    def basis_size(self) -> int:
        """B."""
        return int(self.evaluations.shape[0])

    @property
    def count(self) -> int:
        """K."""
        return int(self.evaluations.shape[1])

    @classmethod
    def single(cls, p: int, geometry: BoundaryGeometry, u_dirichlet: float) -> "ConstraintSet":
        """The one-dimensional single-constraint problem as a K = 1 set."""
        phi_tilde, phi_bar = boundary_values(p, geometry)
        return cls(
            evaluations=phi_bar[:, np.newaxis],
            dirichlet=np.array([u_dirichlet]),
            target=phi_tilde,
        )


@dataclass(frozen=True)
class MultiStencil:
    """Alpha vector and modified basis of a multi-constraint correction."""

    alpha: np.ndarray
    modified_basis: np.ndarray
    kind: MultiKind


def _metric(kind: MultiKind, size: int, metric: Optional[np.ndarray]):
    kind = MultiKind(kind)
    if kind == MultiKind.E:
        if metric is not None:
            raise ValidationError(
                "The Euclidean metric takes no matrix", code=ErrorCode.INVALID_ARGUMENT
            )
        return np.eye(size), None
    if metric is None:
        raise ValidationError(
            f"Kind {kind.value} requires a metric matrix", code=ErrorCode.INVALID_ARGUMENT
        )
    name = "M" if kind == MultiKind.L2 else "W"
    factor = check_spd(metric, size, name)
    return np.asarray(metric, dtype=float), factor


def make_multi_stencil(
    kind: MultiKind, constraints: ConstraintSet, metric: Optional[np.ndarray] = None
) -> MultiStencil:
    """
    Closed-form multi-constraint correction.

    Args:
        kind: E (identity metric), L2 (mass matrix) or W (general SPD matrix)
        constraints: Constraint set
        metric: Mass matrix for L2, weight matrix for W

    Returns:
        Multi-constraint stencil

    Raises:
        RankDeficientError: If Phi^T W^-1 Phi cannot be factorized
    """
    kind = MultiKind(kind)
    _, factor = _metric(kind, constraints.basis_size, metric)
    evaluations = constraints.evaluations
    weighted = evaluations if factor is None else linalg.cho_solve(factor, evaluations)

    gram = evaluations.T @ weighted
    gram = 0.5 * (gram + gram.T)
    try:
        gram_factor = linalg.cho_factor(gram)
    except linalg.LinAlgError as e:
        raise RankDeficientError(f"Phi^T W^-1 Phi is numerically singular: {e}")

    alpha = linalg.cho_solve(gram_factor, weighted.T @ constraints.target)
    return MultiStencil(
        alpha=alpha,
        modified_basis=constraints.target - evaluations @ alpha,
        kind=kind,
    )


def multi_corrected_value(
    stencil: MultiStencil, u: np.ndarray, dirichlet: np.ndarray
) -> float:
    """
    modified_basis . u + alpha . u_D.

    Args:
        stencil: Multi-constraint stencil
        u: B coefficients
        dirichlet: K Dirichlet data

    Returns:
        Corrected value at the evaluation point
    """
    u = np.asarray(u, dtype=float)
    dirichlet = np.atleast_1d(np.asarray(dirichlet, dtype=float))
    if u.shape != stencil.modified_basis.shape or dirichlet.shape != stencil.alpha.shape:
        raise ValidationError(
            "Coefficient or data length does not match the stencil",
            code=ErrorCode.INVALID_ARGUMENT,
        )
    return float(stencil.modified_basis @ u + stencil.alpha @ dirichlet)


def kkt_multi_solution(
    kind: MultiKind,
    constraints: ConstraintSet,
    u: np.ndarray,
    metric: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Minimizer of the multi-constraint problem from its saddle-point system.

    Args:
        kind: Metric kind
        constraints: Constraint set
        u: B coefficients
        metric: Mass or weight matrix when required

    Returns:
        Coefficients v of the constrained minimizer

    Raises:
        RankDeficientError: If the saddle matrix is singular
        NumericalError: If the constraints are violated beyond tolerance
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (constraints.basis_size,):
        raise ValidationError(
            f"Expected {constraints.basis_size} coefficients, got shape {u.shape}",
            code=ErrorCode.INVALID_ARGUMENT,
        )
    objective, _ = _metric(kind, constraints.basis_size, metric)
    try:
        v, _, _ = solve_saddle_point(
            objective, constraints.evaluations, u, constraints.dirichlet
        )
    except SingularSystemError as e:
        raise RankDeficientError(f"Singular multi-constraint saddle system: {e.message}")

    violation = float(
        np.max(np.abs(constraints.evaluations.T @ v - constraints.dirichlet))
    )
    scale = max(1.0, float(np.max(np.abs(constraints.dirichlet))))
    if violation > CONSTRAINT_TOLERANCE * scale:
        raise NumericalError(
            f"Constraint residual {violation:.3e} exceeds tolerance",
            code=ErrorCode.RESIDUAL_TOO_LARGE,
        )
    return v


def kkt_multi_value(
    kind: MultiKind,
    constraints: ConstraintSet,
    u: np.ndarray,
    metric: Optional[np.ndarray] = None,
) -> float:
    """Oracle value phi_tilde . v of the saddle-point minimizer."""
    v = kkt_multi_solution(kind, constraints, u, metric)
    return float(constraints.target @ v)
