"""
Time integration of M dU/dt = K U + load.

With A = M^-1 K and b = M^-1 load the explicit update of order q is the
truncated Taylor series of the exact flow,

    u+ = u + sum_{k=1}^{q} dt^k / k! w_k,  w_1 = A u + b,  w_k = A w_{k-1},

which on a linear autonomous system coincides with DeC of order q. Implicit
Euler solves (M - dt K) u+ = M u + dt load.
"""

from typing import Optional

import numpy as np
from scipy import linalg

from src.dg.operator import DgOperator
from src.utils.errors import ErrorDetail, SingularSystemError, ValidationError
from src.utils.logging import get_logger

logger = get_logger(__name__)

IMPLICIT_RESIDUAL_TOLERANCE = 1e-11


def _check_step(operator: DgOperator, u: np.ndarray, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValidationError(f"Time step must be positive, got {dt}")
    u = np.asarray(u, dtype=float)
    if u.shape != (operator.size,):
        raise ValidationError(
            f"State has shape {u.shape}, operator expects ({operator.size},)"
        )
    return u


def step_explicit(
    operator: DgOperator, u: np.ndarray, dt: float, order: Optional[int] = None
) -> np.ndarray:
    """
    One explicit step by the derivative recursion.

    Args:
        operator: Assembled operator
        u: Current state
        dt: Time step
        order: Truncation order q (default p + 1)

    Returns:
        New state
    """
    u = _check_step(operator, u, dt)
    order = operator.degree + 1 if order is None else order
    matrix = operator.semidiscrete_matrix()

    derivative = matrix @ u + operator.affine_term()
    result = u + dt * derivative
    coefficient = dt
    for k in range(2, order + 1):
        derivative = matrix @ derivative
        coefficient *= dt / k
        result = result + coefficient * derivative
    return result


class ExplicitStepper:
    """
    Explicit order-q stepping with the update folded into one affine map.

    The increment is D u + c with D = P A and c = P b,
    P = sum_{k=1}^{q} dt^k / k! A^{k-1}.
    """

    def __init__(self, operator: DgOperator, dt: float, order: Optional[int] = None):
        """
        Precompute the propagator.

        Args:
            operator: Assembled operator
            dt: Time step
            order: Truncation order q (default p + 1)
        """
        if dt <= 0:
            raise ValidationError(f"Time step must be positive, got {dt}")
        self.dt = dt
        self.order = operator.degree + 1 if order is None else order
        matrix = operator.semidiscrete_matrix()

        term = dt * np.eye(operator.size)
        series = term.copy()
        for k in range(2, self.order + 1):
            term = (dt / k) * (term @ matrix)
            series += term
        self._increment_matrix = series @ matrix
        self._increment_offset = series @ operator.affine_term()
        logger.debug("Explicit stepper: n=%d dt=%.6g order=%d", operator.size, dt, self.order)

    def increment(self, u: np.ndarray) -> np.ndarray:
        """u+ - u."""
        return self._increment_matrix @ u + self._increment_offset

    def step(self, u: np.ndarray) -> np.ndarray:
        """Advance one step."""
        return u + self.increment(u)


class ImplicitEulerStepper:
    """
    Implicit Euler with (M - dt K) factorized once.

    The solve is written for the increment, (M - dt K) (u+ - u) = dt (K u + load),
    so a steady state is a fixed point up to the round-off of K u + load.
    """

    def __init__(self, operator: DgOperator, dt: float):
        """
        Factorize the step matrix.

        Args:
            operator: Assembled operator
            dt: Time step

        Raises:
            SingularSystemError: If M - dt K is singular
        """
        if dt <= 0:
            raise ValidationError(f"Time step must be positive, got {dt}")
        self.dt = dt
        self._stiffness = operator.stiffness
        self._load = operator.load
        self._system = operator.mass - dt * operator.stiffness
        self._factor = linalg.lu_factor(self._system, check_finite=False)
        if np.any(np.diag(self._factor[0]) == 0.0):
            raise SingularSystemError(f"M - dt K is singular for dt = {dt}")
        self._system_norm = float(np.linalg.norm(self._system, np.inf))
        self._checked = False

    def _check_residual(self, solution: np.ndarray, rhs: np.ndarray) -> None:
        residual = float(np.linalg.norm(self._system @ solution - rhs, np.inf))
        scale = self._system_norm * float(np.linalg.norm(solution, np.inf)) + float(
            np.linalg.norm(rhs, np.inf)
        )
        if residual > IMPLICIT_RESIDUAL_TOLERANCE * scale:
            raise SingularSystemError(
                f"Implicit Euler residual {residual:.3e} exceeds tolerance",
                details=[ErrorDetail(param="residual", value=residual, message="too large")],
            )
        self._checked = True

    def increment(self, u: np.ndarray) -> np.ndarray:
        """u+ - u."""
        rhs = self.dt * (self._stiffness @ u + self._load)
        solution = linalg.lu_solve(self._factor, rhs, check_finite=False)
        if not self._checked:
            self._check_residual(solution, rhs)
        return solution

    def step(self, u: np.ndarray) -> np.ndarray:
        """Advance one step."""
        return u + self.increment(u)


def step_implicit_euler(operator: DgOperator, u: np.ndarray, dt: float) -> np.ndarray:
    """
    One implicit Euler step.

    Args:
        operator: Assembled operator
        u: Current state
        dt: Time step

    Returns:
        New state
    """
    u = _check_step(operator, u, dt)
    return ImplicitEulerStepper(operator, dt).step(u)
