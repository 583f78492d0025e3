"""
Global semi-discrete DG operator for linear advection with unit speed.

The cell-i equations read

    M du_i/dt = (K^s - K^R) u_i + K^L u_{i-1} + s_i

with the upwind flux taking the left neighbour's right trace. The global
unknown is cell-major, mode-minor: U = [u_1, ..., u_Ne].
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.boundary.corrections import CorrectionStencil
from src.dg.basis import ReferenceBasis, gauss_legendre_rule
from src.utils.errors import ErrorCode, ErrorDetail, GeometryError, ValidationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

SourceFunction = Callable[[np.ndarray], np.ndarray]

_GEOMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class MeshSpec:
    """Uniform mesh of ``cells`` cells on [x_left, x_right]."""

    cells: int
    x_left: float = 0.0
    x_right: float = 2.0

    def __post_init__(self) -> None:
        if self.cells < 2:
            raise ValidationError(
                f"A mesh needs at least 2 cells, got {self.cells}",
                code=ErrorCode.INVALID_ARGUMENT,
            )
        if self.x_right <= self.x_left:
            raise ValidationError(
                f"Empty domain [{self.x_left}, {self.x_right}]",
                code=ErrorCode.INVALID_ARGUMENT,
            )

    @property
    def dx(self) -> float:
        """Cell length."""
        return (self.x_right - self.x_left) / self.cells

    def cell_left(self, index: int) -> float:
        """Left face of the 0-based cell ``index``."""
        return self.x_left + index * self.dx

    def cell_lefts(self) -> np.ndarray:
        """Left faces of every cell."""
        return self.x_left + self.dx * np.arange(self.cells)


@dataclass(frozen=True)
class DgOperator:
    """
    Assembled operator: M dU/dt = K U + load.

    Attributes:
        degree: Polynomial degree p
        mesh: Mesh the operator lives on
        mass: Global (diagonal) mass matrix
        stiffness: Global stiffness + flux matrix K
        load: Affine load vector (boundary datum + projected source)
        stencil: Boundary stencil of the embedded configuration, None if periodic
    """

    degree: int
    mesh: MeshSpec
    mass: np.ndarray
    stiffness: np.ndarray
    load: np.ndarray
    stencil: Optional[CorrectionStencil] = None

    @property
    def block_size(self) -> int:
        """Number of modes per cell."""
        return self.degree + 1

    @property
    def size(self) -> int:
        """Total number of unknowns."""
        return int(self.load.size)

    @property
    def periodic(self) -> bool:
        """Whether the operator carries periodic coupling."""
        return self.stencil is None

    def semidiscrete_matrix(self) -> np.ndarray:
        """A = M^-1 K."""
        return self.stiffness / np.diag(self.mass)[:, np.newaxis]

    def affine_term(self) -> np.ndarray:
        """b = M^-1 load."""
        return self.load / np.diag(self.mass)

    def block(self, row: int, column: int, matrix: Optional[np.ndarray] = None) -> np.ndarray:
        """
        B x B block (row, column) of K, or of ``matrix`` when given.

        Args:
            row: 0-based cell index of the equation
            column: 0-based cell index of the unknown
            matrix: Global matrix to slice (defaults to K)

        Returns:
            Copy of the block
        """
        size = self.block_size
        source = self.stiffness if matrix is None else matrix
        return source[row * size : (row + 1) * size, column * size : (column + 1) * size].copy()


def _interior_blocks(basis: ReferenceBasis):
    right = basis.right_trace()
    left = basis.left_trace()
    diagonal = basis.stiffness_matrix() - np.outer(right, right)
    upwind = np.outer(left, right)
    return diagonal, upwind


def _global_mass(basis: ReferenceBasis, mesh: MeshSpec) -> np.ndarray:
    return np.kron(np.eye(mesh.cells), basis.mass_matrix(mesh.dx))


def assemble_periodic(p: int, mesh: MeshSpec) -> DgOperator:
    """
    Assemble the periodic operator (no load).

    Cell 1 receives the right trace of cell Ne through the wrap-around block.

    Args:
        p: Polynomial degree
        mesh: Mesh specification

    Returns:
        Periodic operator
    """
    basis = ReferenceBasis(p)
    diagonal, upwind = _interior_blocks(basis)
    cells = mesh.cells

    coupling = np.eye(cells, k=-1)
    coupling[0, cells - 1] = 1.0
    stiffness = np.kron(np.eye(cells), diagonal) + np.kron(coupling, upwind)

    return DgOperator(
        degree=p,
        mesh=mesh,
        mass=_global_mass(basis, mesh),
        stiffness=stiffness,
        load=np.zeros(cells * basis.size),
    )


def _check_geometry(p: int, mesh: MeshSpec, stencil: CorrectionStencil) -> None:
    geometry = stencil.geometry
    problems = []
    if stencil.degree != p:
        problems.append(
            ErrorDetail(param="p", value=stencil.degree, message=f"operator uses p={p}")
        )
    if abs(geometry.dx - mesh.dx) > _GEOMETRY_RTOL * mesh.dx:
        problems.append(
            ErrorDetail(param="dx", value=geometry.dx, message=f"mesh cell length is {mesh.dx}")
        )
    if abs(geometry.surrogate - mesh.x_left) > _GEOMETRY_RTOL * max(1.0, abs(mesh.x_left)):
        problems.append(
            ErrorDetail(
                param="surrogate",
                value=geometry.surrogate,
                message=f"left mesh face is {mesh.x_left}",
            )
        )
    if problems:
        raise GeometryError(
            "Stencil geometry does not match the mesh",
            details=problems,
            code=ErrorCode.GEOMETRY_MISMATCH,
        )


def assemble_embedded(
    p: int,
    mesh: MeshSpec,
    stencil: CorrectionStencil,
    u_dirichlet: float,
    source: Optional[SourceFunction] = None,
) -> DgOperator:
    """
    Assemble the operator with an embedded inflow boundary at the left face.

    The inflow value v_h(x_tilde) = modified_basis . u_1 + alpha u_D is split
    into the cell-1 block l (x) modified_basis and the load alpha u_D l. The
    last cell has pure outflow.

    Args:
        p: Polynomial degree
        mesh: Mesh specification
        stencil: Boundary correction stencil on the left mesh face
        u_dirichlet: Dirichlet datum at the real boundary
        source: Vectorized source term s(x), None for no source

    Returns:
        Embedded operator

    Raises:
        GeometryError: If the stencil does not belong to this mesh
    """
    _check_geometry(p, mesh, stencil)
    basis = ReferenceBasis(p)
    diagonal, upwind = _interior_blocks(basis)
    cells = mesh.cells
    size = basis.size
    left = basis.left_trace()

    stiffness = np.kron(np.eye(cells), diagonal) + np.kron(np.eye(cells, k=-1), upwind)
    stiffness[:size, :size] += np.outer(left, stencil.modified_basis)

    load = np.zeros(cells * size)
    if source is not None:
        load += _project_moments(source, p, mesh).ravel()
    load[:size] += stencil.alpha * u_dirichlet * left

    logger.debug(
        "Assembled embedded operator p=%d Ne=%d kind=%s alpha=%.6g",
        p,
        cells,
        stencil.kind.value,
        stencil.alpha,
    )
    return DgOperator(
        degree=p,
        mesh=mesh,
        mass=_global_mass(basis, mesh),
        stiffness=stiffness,
        load=load,
        stencil=stencil,
    )


def _sample(f: SourceFunction, x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)


def _quadrature_points(p: int, mesh: MeshSpec, nodes: Optional[int] = None):
    rule = gauss_legendre_rule(p + 2 if nodes is None else nodes)
    half = 0.5 * mesh.dx
    points = mesh.cell_lefts()[:, np.newaxis] + half * (rule.nodes + 1.0)
    return rule, points


def _project_moments(f: SourceFunction, p: int, mesh: MeshSpec) -> np.ndarray:
    # Integrals of phi_m f over every cell, shape (cells, p + 1).
    rule, points = _quadrature_points(p, mesh)
    values = ReferenceBasis(p).values(rule.nodes)
    samples = _sample(f, points)
    return 0.5 * mesh.dx * (samples * rule.weights) @ values


def project_function(f: SourceFunction, p: int, mesh: MeshSpec) -> np.ndarray:
    """
    Cell-wise L2 projection onto the Legendre basis.

    Args:
        f: Vectorized function
        p: Polynomial degree
        mesh: Mesh specification

    Returns:
        Global coefficient vector (cell-major)
    """
    inverse_mass = (2.0 * np.arange(p + 1) + 1.0) / mesh.dx
    return (_project_moments(f, p, mesh) * inverse_mass).ravel()


def evaluate(coefficients: np.ndarray, p: int, mesh: MeshSpec, x) -> np.ndarray:
    """
    Evaluate the piecewise polynomial at physical points.

    Interior faces belong to the cell on their right; x_right belongs to
    the last cell.

    Args:
        coefficients: Global coefficient vector
        p: Polynomial degree
        mesh: Mesh specification
        x: Points in [x_left, x_right]

    Returns:
        Values with the shape of x
    """
    x = np.asarray(x, dtype=float)
    slack = 1e-12 * (mesh.x_right - mesh.x_left)
    if np.any(x < mesh.x_left - slack) or np.any(x > mesh.x_right + slack):
        raise ValidationError(
            "Evaluation points outside the mesh", code=ErrorCode.INVALID_ARGUMENT
        )
    cells = np.clip(np.floor((x - mesh.x_left) / mesh.dx).astype(int), 0, mesh.cells - 1)
    xi = 2.0 * (x - mesh.x_left - cells * mesh.dx) / mesh.dx - 1.0
    local = np.asarray(coefficients, dtype=float).reshape(mesh.cells, p + 1)[cells]
    return np.sum(ReferenceBasis(p).values(xi) * local, axis=-1)


def l2_error(
    coefficients: np.ndarray,
    f: SourceFunction,
    p: int,
    mesh: MeshSpec,
    nodes: Optional[int] = None,
) -> float:
    """
    L2 norm of u_h - f over [x_left, x_right].

    Args:
        coefficients: Global coefficient vector
        f: Vectorized reference function
        p: Polynomial degree
        mesh: Mesh specification
        nodes: Quadrature nodes per cell (default p + 2)

    Returns:
        Error norm
    """
    rule, points = _quadrature_points(p, mesh, nodes)
    local = np.asarray(coefficients, dtype=float).reshape(mesh.cells, p + 1)
    approximation = local @ ReferenceBasis(p).values(rule.nodes).T
    difference = approximation - _sample(f, points)
    return float(np.sqrt(0.5 * mesh.dx * np.sum(difference**2 * rule.weights)))
