"""
Tests for the multi-constraint corrections.
"""

import unittest

import numpy as np
import pytest

from src.boundary.corrections import (
    BoundaryGeometry,
    CorrectionKind,
    kkt_value,
    make_stencil,
)
from src.boundary.multi import (
    ConstraintSet,
    MultiKind,
    kkt_multi_solution,
    kkt_multi_value,
    make_multi_stencil,
    multi_corrected_value,
)
from src.dg.basis import legendre_eval, nodal_metric
from src.utils.errors import RankDeficientError, ValidationError


def _tensor_constraints(p: int, points, u_dirichlet, target_point) -> ConstraintSet:
    # Tensor-product Legendre basis of size (p + 1)^2 at 2D points.
    def values(point):
        return np.outer(legendre_eval(p, point[0]), legendre_eval(p, point[1])).ravel()

    return ConstraintSet(
        evaluations=np.column_stack([values(point) for point in points]),
        dirichlet=np.asarray(u_dirichlet, dtype=float),
        target=values(target_point),
    )


def _random_constraints(rng, size: int, count: int) -> ConstraintSet:
    return ConstraintSet(
        evaluations=rng.standard_normal((size, count)),
        dirichlet=rng.standard_normal(count),
        target=rng.standard_normal(size),
    )


class TestConstraintSet(unittest.TestCase):
    """Tests for constraint set validation."""

    def test_shapes(self):
        """Test basis size and constraint count."""
        constraints = _random_constraints(np.random.default_rng(1), 5, 2)
        self.assertEqual(constraints.basis_size, 5)
        self.assertEqual(constraints.count, 2)

    def test_too_many_constraints(self):
        """Test that K > B is rejected."""
        with self.assertRaises(ValidationError):
            ConstraintSet(np.ones((2, 3)), np.zeros(3), np.zeros(2))

    def test_mismatched_lengths(self):
        """Test data and target lengths."""
        with self.assertRaises(ValidationError):
            ConstraintSet(np.eye(3)[:, :2], np.zeros(3), np.zeros(3))
        with self.assertRaises(ValidationError):
            ConstraintSet(np.eye(3)[:, :2], np.zeros(2), np.zeros(2))

    def test_rank_deficient(self):
        """Test that repeated constraint points are rejected with the singular value ratio."""
        column = np.array([1.0, 0.5, -0.25])
        with self.assertRaises(RankDeficientError) as context:
            ConstraintSet(np.column_stack([column, column]), np.zeros(2), np.zeros(3))
        self.assertEqual(context.exception.details[0].param, "evaluations")
        self.assertLessEqual(context.exception.details[0].value, 1e-10)

    def test_single(self):
        """Test the one-dimensional K = 1 set."""
        geometry = BoundaryGeometry(0.0, -0.5, 1.0)
        constraints = ConstraintSet.single(2, geometry, 0.3)
        self.assertEqual(constraints.evaluations.shape, (3, 1))
        np.testing.assert_allclose(constraints.target, [1.0, -1.0, 1.0])
        np.testing.assert_allclose(constraints.evaluations[:, 0], [1.0, -2.0, 5.5])


class TestMultiStencil(unittest.TestCase):
    """Tests for the closed-form multi-constraint corrections."""

    def test_reduction_to_single_constraint(self):
        """Test K = 1 in the equispaced nodal metric against the ROD-E stencil."""
        for p in range(7):
            for d in (-0.95, -0.4, 0.25, 0.8):
                geometry = BoundaryGeometry(0.0, d, 1.0)
                single = make_stencil(CorrectionKind.ROD_E, p, geometry)
                multi = make_multi_stencil(
                    MultiKind.W, ConstraintSet.single(p, geometry, 0.0), nodal_metric(p)
                )
                self.assertAlmostEqual(float(multi.alpha[0]), single.alpha, delta=1e-13)
                np.testing.assert_allclose(
                    multi.modified_basis, single.modified_basis, atol=1e-13
                )

    def test_reduction_l2(self):
        """Test K = 1 with the mass matrix against ROD-L2."""
        geometry = BoundaryGeometry(0.0, -0.7, 1.0)
        mass = np.diag(1.0 / (2.0 * np.arange(4) + 1.0))
        single = make_stencil(CorrectionKind.ROD_L2, 3, geometry)
        multi = make_multi_stencil(MultiKind.L2, ConstraintSet.single(3, geometry, 0.0), mass)
        self.assertAlmostEqual(float(multi.alpha[0]), single.alpha, delta=1e-13)

    def test_square_system_interpolates(self):
        """Test K = B: zero modified basis and pure interpolation of the data."""
        rng = np.random.default_rng(7)
        constraints = _random_constraints(rng, 4, 4)
        stencil = make_multi_stencil(MultiKind.E, constraints)
        np.testing.assert_allclose(stencil.modified_basis, 0.0, atol=1e-12)

        expected = constraints.target @ np.linalg.solve(
            constraints.evaluations.T, constraints.dirichlet
        )
        value = multi_corrected_value(stencil, rng.standard_normal(4), constraints.dirichlet)
        self.assertAlmostEqual(value, float(expected), delta=1e-10)

    def test_zero_coefficients_give_alpha_dot_data(self):
        """Test that u = 0 yields alpha . u_D."""
        rng = np.random.default_rng(11)
        constraints = _random_constraints(rng, 6, 3)
        stencil = make_multi_stencil(MultiKind.W, constraints, np.diag(rng.uniform(1, 2, 6)))
        value = multi_corrected_value(stencil, np.zeros(6), constraints.dirichlet)
        self.assertAlmostEqual(value, float(stencil.alpha @ constraints.dirichlet), delta=1e-14)

    def test_metric_validation(self):
        """Test missing, unexpected and non-SPD metrics."""
        constraints = _random_constraints(np.random.default_rng(2), 3, 1)
        with self.assertRaises(ValidationError):
            make_multi_stencil(MultiKind.E, constraints, np.eye(3))
        with self.assertRaises(ValidationError):
            make_multi_stencil(MultiKind.L2, constraints)
        with self.assertRaises(ValidationError):
            make_multi_stencil(MultiKind.W, constraints, -np.eye(3))

    def test_length_mismatch(self):
        """Test corrected values with wrong input lengths."""
        constraints = _random_constraints(np.random.default_rng(5), 3, 2)
        stencil = make_multi_stencil(MultiKind.E, constraints)
        with self.assertRaises(ValidationError):
            multi_corrected_value(stencil, np.zeros(2), np.zeros(2))
        with self.assertRaises(ValidationError):
            multi_corrected_value(stencil, np.zeros(3), np.zeros(3))


def test_random_l2_instance_matches_oracle(rng):
    """Test B = 6, K = 3 with a diagonal mass matrix against the saddle point."""
    constraints = _random_constraints(rng, 6, 3)
    mass = np.diag(rng.uniform(0.1, 1.0, 6))
    u = rng.standard_normal(6)
    stencil = make_multi_stencil(MultiKind.L2, constraints, mass)
    closed = multi_corrected_value(stencil, u, constraints.dirichlet)
    assert closed == pytest.approx(kkt_multi_value(MultiKind.L2, constraints, u, mass), abs=1e-10)


def test_tensor_product_boundary(rng):
    """Test a 2D tensor basis with three points on a line boundary."""
    points = [(-0.9, -0.5), (-0.9, 0.1), (-0.9, 0.7)]
    constraints = _tensor_constraints(2, points, [0.2, -0.1, 0.4], (-1.0, 0.0))
    u = rng.standard_normal(9)
    for kind, metric in ((MultiKind.E, None), (MultiKind.W, 2.0 * np.eye(9))):
        stencil = make_multi_stencil(kind, constraints, metric)
        closed = multi_corrected_value(stencil, u, constraints.dirichlet)
        assert closed == pytest.approx(
            kkt_multi_value(kind, constraints, u, metric), abs=1e-10
        )


def test_satisfied_constraints_keep_coefficients(rng):
    """Test that u_D = Phi^T u leaves u unchanged."""
    evaluations = rng.standard_normal((5, 2))
    u = rng.standard_normal(5)
    constraints = ConstraintSet(evaluations, evaluations.T @ u, rng.standard_normal(5))
    v = kkt_multi_solution(MultiKind.E, constraints, u)
    np.testing.assert_allclose(v, u, atol=1e-12)
    assert kkt_multi_value(MultiKind.E, constraints, u) == pytest.approx(
        float(constraints.target @ u), abs=1e-12
    )


def test_kkt_solution_interpolates_data(rng):
    """Test that the minimizer reproduces every datum."""
    constraints = _random_constraints(rng, 7, 4)
    v = kkt_multi_solution(MultiKind.E, constraints, rng.standard_normal(7))
    np.testing.assert_allclose(constraints.evaluations.T @ v, constraints.dirichlet, atol=1e-10)


def test_single_constraint_oracles_agree(rng):
    """Test the K = 1 multi oracle against the single-constraint oracle."""
    geometry = BoundaryGeometry(0.0, -0.6, 1.0)
    u = rng.standard_normal(4)
    constraints = ConstraintSet.single(3, geometry, 0.35)
    multi = kkt_multi_value(MultiKind.W, constraints, u, nodal_metric(3))
    single = kkt_value(CorrectionKind.ROD_E, 3, geometry, u, 0.35)
    assert multi == pytest.approx(single, abs=1e-12)
