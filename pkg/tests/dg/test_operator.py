"""
Tests for the global DG operator assembly.
"""

import unittest

import numpy as np
import pytest

from src.boundary.corrections import BoundaryGeometry, CorrectionKind, make_stencil
from src.dg.operator import (
    MeshSpec,
    assemble_embedded,
    assemble_periodic,
    evaluate,
    l2_error,
    project_function,
)
from src.utils.errors import GeometryError, ValidationError


def _constant_state(p: int, cells: int, value: float) -> np.ndarray:
    state = np.zeros((cells, p + 1))
    state[:, 0] = value
    return state.ravel()


class TestMeshSpec(unittest.TestCase):
    """Tests for the uniform mesh."""

    def test_cell_length_and_faces(self):
        """Test dx and the left faces."""
        mesh = MeshSpec(4, 0.0, 2.0)
        self.assertEqual(mesh.dx, 0.5)
        self.assertEqual(mesh.cell_left(3), 1.5)
        np.testing.assert_allclose(mesh.cell_lefts(), [0.0, 0.5, 1.0, 1.5])

    def test_invalid_meshes(self):
        """Test that degenerate meshes are rejected."""
        with self.assertRaises(ValidationError):
            MeshSpec(1)
        with self.assertRaises(ValidationError):
            MeshSpec(4, 1.0, 1.0)


class TestPeriodicOperator(unittest.TestCase):
    """Tests for the periodic operator."""

    def test_p0_two_cells(self):
        """Test the first-order upwind matrix."""
        operator = assemble_periodic(0, MeshSpec(2, 0.0, 2.0))
        np.testing.assert_allclose(operator.semidiscrete_matrix(), [[-1.0, 1.0], [1.0, -1.0]])
        self.assertTrue(operator.periodic)

    def test_constants_are_steady(self):
        """Test that a constant state is in the kernel."""
        for p in range(5):
            operator = assemble_periodic(p, MeshSpec(3, 0.0, 3.0))
            state = _constant_state(p, 3, 2.5)
            np.testing.assert_allclose(operator.stiffness @ state, 0.0, atol=1e-13)

    def test_wrap_around_block(self):
        """Test that cell 1 is fed by the last cell."""
        operator = assemble_periodic(2, MeshSpec(3, 0.0, 3.0))
        left = np.array([1.0, -1.0, 1.0])
        right = np.ones(3)
        np.testing.assert_allclose(operator.block(0, 2), np.outer(left, right))
        np.testing.assert_allclose(operator.block(1, 0), np.outer(left, right))
        np.testing.assert_allclose(operator.block(0, 1), 0.0)

    def test_energy_dissipation(self):
        """Test that the symmetric part of K is negative semidefinite."""
        operator = assemble_periodic(4, MeshSpec(2, 0.0, 2.0))
        symmetric = 0.5 * (operator.stiffness + operator.stiffness.T)
        self.assertLessEqual(float(np.max(np.linalg.eigvalsh(symmetric))), 1e-12)


class TestEmbeddedOperator(unittest.TestCase):
    """Tests for the embedded operator."""

    def test_constant_is_steady_for_every_kind(self):
        """Test that u = c with u_D = c is a steady state for any distance."""
        mesh = MeshSpec(4, 0.0, 2.0)
        for kind in (CorrectionKind.SB, CorrectionKind.ROD_E, CorrectionKind.ROD_L2):
            for d in (-0.8, 0.0, 0.45):
                stencil = make_stencil(kind, 3, BoundaryGeometry.from_normalized(0.0, d, mesh.dx))
                operator = assemble_embedded(3, mesh, stencil, 1.7)
                state = _constant_state(3, 4, 1.7)
                residual = operator.semidiscrete_matrix() @ state + operator.affine_term()
                np.testing.assert_allclose(residual, 0.0, atol=1e-12)

    def test_fitted_boundary_block(self):
        """Test the P1 boundary block at d = 0 and its eigenvalues."""
        mesh = MeshSpec(2, 0.0, 2.0)
        stencil = make_stencil(CorrectionKind.ROD_E, 1, BoundaryGeometry(0.0, 0.0, 1.0))
        operator = assemble_embedded(1, mesh, stencil, 0.0)
        block = operator.block(0, 0, operator.semidiscrete_matrix())
        np.testing.assert_allclose(block, [[-1.0, -1.0], [3.0, -3.0]])
        eigenvalues = np.sort_complex(np.linalg.eigvals(block))
        np.testing.assert_allclose(
            eigenvalues, [-2.0 - 1j * np.sqrt(2.0), -2.0 + 1j * np.sqrt(2.0)], atol=1e-12
        )

    def test_block_lower_bidiagonal(self):
        """Test that only the diagonal and first subdiagonal blocks are nonzero."""
        mesh = MeshSpec(4, 0.0, 4.0)
        stencil = make_stencil(CorrectionKind.ROD_L2, 2, BoundaryGeometry(0.0, -0.3, 1.0))
        operator = assemble_embedded(2, mesh, stencil, 0.0)
        for row in range(4):
            for column in range(4):
                if column not in (row, row - 1):
                    np.testing.assert_array_equal(operator.block(row, column), 0.0)

    def test_load_carries_dirichlet_datum(self):
        """Test the boundary load alpha u_D l."""
        mesh = MeshSpec(2, 0.0, 2.0)
        stencil = make_stencil(CorrectionKind.SB, 2, BoundaryGeometry(0.0, 0.4, 1.0))
        operator = assemble_embedded(2, mesh, stencil, 3.0)
        np.testing.assert_allclose(operator.load[:3], [3.0, -3.0, 3.0])
        np.testing.assert_array_equal(operator.load[3:], 0.0)

    def test_geometry_mismatch(self):
        """Test that a stencil of another mesh is rejected."""
        mesh = MeshSpec(4, 0.0, 2.0)
        wrong_dx = make_stencil(CorrectionKind.ROD_E, 1, BoundaryGeometry(0.0, 0.1, 1.0))
        with self.assertRaises(GeometryError):
            assemble_embedded(1, mesh, wrong_dx, 0.0)

        wrong_degree = make_stencil(CorrectionKind.ROD_E, 2, BoundaryGeometry(0.0, 0.1, 0.5))
        with self.assertRaises(GeometryError):
            assemble_embedded(1, mesh, wrong_degree, 0.0)

        wrong_face = make_stencil(CorrectionKind.ROD_E, 1, BoundaryGeometry(0.3, 0.1, 0.5))
        with self.assertRaises(GeometryError):
            assemble_embedded(1, mesh, wrong_face, 0.0)


def test_projection_reproduces_polynomials():
    """Test that projecting a degree-p polynomial is exact."""
    mesh = MeshSpec(5, 0.0, 2.0)

    def cubic(x):
        return 1.0 - 2.0 * x + 0.5 * x**3

    coefficients = project_function(cubic, 3, mesh)
    x = np.linspace(0.0, 2.0, 23)
    np.testing.assert_allclose(evaluate(coefficients, 3, mesh, x), cubic(x), atol=1e-12)
    assert l2_error(coefficients, cubic, 3, mesh) <= 1e-12


def test_l2_error_of_constant_offset():
    """Test the error norm of a constant offset over [0, 2]."""
    mesh = MeshSpec(4, 0.0, 2.0)
    coefficients = _constant_state(2, 4, 0.5)
    error = l2_error(coefficients, lambda x: np.zeros_like(x), 2, mesh)
    assert error == pytest.approx(0.5 * np.sqrt(2.0), rel=1e-14)


def test_evaluate_rejects_points_outside_mesh():
    """Test evaluation bounds."""
    mesh = MeshSpec(2, 0.0, 2.0)
    with pytest.raises(ValidationError):
        evaluate(np.zeros(4), 1, mesh, [2.5])


@pytest.mark.parametrize("p,cells", [(0, 20), (1, 20), (2, 10), (3, 10), (4, 8)])
def test_projection_error_order(p, cells):
    """Test that the projection error of a smooth function decays at order p + 1."""

    def wave(x):
        return 0.1 * np.sin(np.pi * x)

    errors = []
    for count in (cells, 2 * cells, 4 * cells):
        mesh = MeshSpec(count, 0.0, 2.0)
        errors.append(l2_error(project_function(wave, p, mesh), wave, p, mesh))
    for coarse, fine in zip(errors, errors[1:]):
        assert fine < coarse
        assert np.log2(coarse / fine) == pytest.approx(p + 1, abs=0.3)


@pytest.mark.parametrize("p", range(6))
def test_periodic_operator_conserves_mass(p, rng):
    """Test that the integral of du/dt vanishes on a periodic mesh."""
    for cells in (2, 5):
        operator = assemble_periodic(p, MeshSpec(cells, 0.0, 2.0))
        ones = _constant_state(p, cells, 1.0)
        u = rng.standard_normal(operator.size)
        rate = ones @ operator.mass @ operator.semidiscrete_matrix() @ u
        assert abs(rate) <= 1e-12 * (1.0 + float(np.linalg.norm(u))) * (p + 1) ** 2
