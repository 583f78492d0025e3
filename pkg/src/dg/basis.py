"""
Legendre modal basis on the reference element.

This module provides Legendre polynomial evaluation, Gauss-Legendre quadrature
and the elemental mass and stiffness matrices of the 1D DG discretization.
The reference coordinate xi in [-1, 1] maps to the physical cell
[x_c - dx/2, x_c + dx/2] through xi = 2 (x - x_c) / dx.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from numpy.polynomial import legendre

from src.utils.errors import ErrorCode, ValidationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

MAX_DEGREE = 12
MAX_QUADRATURE_NODES = 16

ArrayLike = Union[float, np.ndarray]


def _check_degree(p: int) -> None:
    if not 0 <= p <= MAX_DEGREE:
        raise ValidationError(
            f"Polynomial degree {p} outside supported range [0, {MAX_DEGREE}]",
            code=ErrorCode.INVALID_ARGUMENT,
        )


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        """Number of nodes."""
        return int(self.nodes.size)

    def integrate(self, values: np.ndarray) -> float:
        """Integrate samples taken at the nodes."""
        return float(np.dot(self.weights, values))

    def mapped(self, left: float, right: float) -> "QuadratureRule":
        """Rule transported to the interval [left, right]."""
        half = 0.5 * (right - left)
        return QuadratureRule(
            nodes=0.5 * (left + right) + half * self.nodes,
            weights=half * self.weights,
        )


def legendre_eval(p: int, xi: ArrayLike) -> np.ndarray:
    """
    Evaluate P_0 .. P_p at reference coordinates.

    Evaluation outside [-1, 1] is allowed; it is needed when the real
    boundary lies outside the first cell.

    Args:
        p: Polynomial degree
        xi: Scalar or array of reference coordinates

    Returns:
        Array of shape xi.shape + (p + 1,)
    """
    _check_degree(p)
    xi = np.asarray(xi, dtype=float)
    values = legendre.legvander(xi, p)
    # legvander promotes scalars to shape (1,)
    return values[0] if xi.ndim == 0 else values


@lru_cache(maxsize=None)
def _derivative_matrix(p: int) -> np.ndarray:
    # Column k holds the Legendre coefficients of P_k'.
    size = p + 1
    matrix = np.zeros((size, size))
    for k, unit in enumerate(np.eye(size)):
        coefficients = legendre.legder(unit)
        matrix[: coefficients.size, k] = coefficients
    matrix.setflags(write=False)
    return matrix


def legendre_deriv(p: int, xi: ArrayLike) -> np.ndarray:
    """
    Evaluate dP_k/dxi for k = 0 .. p.

    Args:
        p: Polynomial degree
        xi: Scalar or array of reference coordinates

    Returns:
        Array of shape xi.shape + (p + 1,)
    """
    return legendre_eval(p, xi) @ _derivative_matrix(p)


@lru_cache(maxsize=None)
def gauss_legendre_rule(n: int) -> QuadratureRule:
    """
    Gauss-Legendre quadrature with n nodes.

    Nodes are the roots of P_n, refined by Newton iteration from
    Chebyshev-Gauss starting points (each start lies in the bracket of
    exactly one root); weights are 2 / ((1 - xi^2) P_n'(xi)^2).

    Args:
        n: Number of nodes, 1 <= n <= 16

    Returns:
        Quadrature rule with ascending nodes
    """
    if not 1 <= n <= MAX_QUADRATURE_NODES:
        raise ValidationError(
            f"Quadrature node count {n} outside [1, {MAX_QUADRATURE_NODES}]",
            code=ErrorCode.INVALID_ARGUMENT,
        )

    unit = np.zeros(n + 1)
    unit[n] = 1.0
    derivative = legendre.legder(unit)

    k = np.arange(1, n + 1)
    nodes = -np.cos((4 * k - 1) * np.pi / (4 * n + 2))
    for _ in range(100):
        step = legendre.legval(nodes, unit) / legendre.legval(nodes, derivative)
        nodes = nodes - step
        if np.max(np.abs(step)) <= 1e-15:
            break
    else:
        logger.warning("Gauss-Legendre Newton iteration for n=%d hit the cap", n)

    slopes = legendre.legval(nodes, derivative)
    weights = 2.0 / ((1.0 - nodes**2) * slopes**2)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights)


def element_mass_matrix(p: int, dx: float) -> np.ndarray:
    """
    Elemental mass matrix, diag(dx / (2k + 1)).

    Args:
        p: Polynomial degree
        dx: Cell length

    Returns:
        (p + 1) x (p + 1) diagonal matrix
    """
    _check_degree(p)
    if dx <= 0:
        raise ValidationError(
            f"Cell length must be positive, got {dx}", code=ErrorCode.INVALID_ARGUMENT
        )
    return np.diag(dx / (2.0 * np.arange(p + 1) + 1.0))


def equispaced_vandermonde(p: int) -> np.ndarray:
    """
    Legendre values at p + 1 equispaced nodes of [-1, 1], endpoints included.

    Row i maps modal coefficients to the value at node i, so V u are the
    coefficients of the same polynomial in the equispaced Lagrange basis.
    """
    _check_degree(p)
    return legendre.legvander(np.linspace(-1.0, 1.0, p + 1), p)


@lru_cache(maxsize=None)
def _nodal_metric(p: int) -> np.ndarray:
    vandermonde = equispaced_vandermonde(p)
    metric = vandermonde.T @ vandermonde
    metric.setflags(write=False)
    return metric


def nodal_metric(p: int) -> np.ndarray:
    """
    V^T V for the equispaced Vandermonde V.

    (v - u)^T V^T V (v - u) is the Euclidean distance between the equispaced
    Lagrange coefficients of two modal vectors.
    """
    _check_degree(p)
    return _nodal_metric(p).copy()


def element_stiffness_matrix(p: int) -> np.ndarray:
    """
    Elemental stiffness matrix K^s[m, n] = integral of phi_m' phi_n.

    The Jacobians cancel, so the matrix does not depend on dx. The entry is 2
    when m - n is odd and positive, zero otherwise.

    Args:
        p: Polynomial degree

    Returns:
        (p + 1) x (p + 1) strictly lower triangular matrix
    """
    _check_degree(p)
    m, n = np.indices((p + 1, p + 1))
    return np.where((m > n) & ((m - n) % 2 == 1), 2.0, 0.0)


@dataclass(frozen=True)
class ReferenceBasis:
    """Legendre basis of degree p mapped to cells of length dx."""

    degree: int

    def __post_init__(self) -> None:
        _check_degree(self.degree)

    @property
    def size(self) -> int:
        """Number of basis functions B = p + 1."""
        return self.degree + 1

    def values(self, xi: ArrayLike) -> np.ndarray:
        """Basis values at reference coordinates."""
        return legendre_eval(self.degree, xi)

    def derivatives(self, xi: ArrayLike) -> np.ndarray:
        """Reference-coordinate derivatives at reference coordinates."""
        return legendre_deriv(self.degree, xi)

    def values_at(self, x: ArrayLike, left: float, dx: float) -> np.ndarray:
        """Basis values at physical points of the cell [left, left + dx]."""
        xi = 2.0 * (np.asarray(x, dtype=float) - left) / dx - 1.0
        return self.values(xi)

    def left_trace(self) -> np.ndarray:
        """Values at the left face, (-1)^k."""
        return self.values(-1.0)

    def right_trace(self) -> np.ndarray:
        """Values at the right face, all ones."""
        return self.values(1.0)

    def mass_matrix(self, dx: float) -> np.ndarray:
        """Elemental mass matrix."""
        return element_mass_matrix(self.degree, dx)

    def stiffness_matrix(self) -> np.ndarray:
        """Elemental stiffness matrix."""
        return element_stiffness_matrix(self.degree)

    def quadrature(self) -> QuadratureRule:
        """Default rule for projections and error norms (p + 2 nodes)."""
        return gauss_legendre_rule(self.degree + 2)
