"""
Error handling utilities for the embedded-boundary DG toolkit.

This module provides the exception hierarchy shared by the numerical modules
and the mapping from exceptions to command-line exit codes.
"""

from enum import Enum
from typing import Any, List, Optional

from pydantic import BaseModel

from src.utils.logging import get_logger

logger = get_logger(__name__)


class ErrorCode(str, Enum):
    """Enumeration of error codes for consistent error reports."""

    # Validation errors (1xxx)
    VALIDATION_ERROR = "1000"
    INVALID_ARGUMENT = "1001"
    INVALID_CONFIGURATION = "1002"
    NOT_SPD = "1003"

    # Geometry errors (2xxx)
    GEOMETRY_ERROR = "2000"
    DISTANCE_OUT_OF_RANGE = "2001"
    GEOMETRY_MISMATCH = "2002"

    # Numerical errors (3xxx)
    NUMERICAL_ERROR = "3000"
    EIGENSOLVER_FAILURE = "3001"
    SINGULAR_SYSTEM = "3002"
    RANK_DEFICIENT = "3003"
    DEGENERATE_WEIGHT = "3004"
    RESIDUAL_TOO_LARGE = "3005"

    # Stability / run errors (4xxx)
    UNSTABLE_RUN = "4000"

    # Internal errors (5xxx)
    INTERNAL_ERROR = "5000"


class ExitCode(int, Enum):
    """Process exit codes of the command-line front end."""

    SUCCESS = 0
    VALIDATION = 1
    UNSTABLE = 2
    NUMERICAL = 3


class ErrorDetail(BaseModel):
    """Model representing detailed error information."""

    location: Optional[str] = None
    param: Optional[str] = None
    value: Optional[Any] = None
    message: str


class ErrorResponse(BaseModel):
    """Model representing a standardized error report."""

    code: str
    message: str
    exit_code: int
    details: Optional[List[ErrorDetail]] = None


class RodDgError(Exception):
    """Base exception class for toolkit errors."""

    def __init__(
        self,
        code: ErrorCode,
        message: str,
        exit_code: ExitCode = ExitCode.NUMERICAL,
        details: Optional[List[ErrorDetail]] = None,
    ):
        """
        Initialize a new toolkit error.

        Args:
            code: Error code
            message: Error message
            exit_code: Exit code the CLI returns for this error
            details: Optional list of error details
        """
        self.code = code
        self.message = message
        self.exit_code = exit_code
        self.details = details or []
        super().__init__(self.message)

    def to_response(self) -> ErrorResponse:
        """Render the error as a report model."""
        return ErrorResponse(
            code=self.code.value,
            message=self.message,
            exit_code=int(self.exit_code),
            details=self.details or None,
        )


class ValidationError(RodDgError):
    """Exception for invalid inputs, flags and configurations."""

    def __init__(
        self,
        message: str = "Validation error",
        details: Optional[List[ErrorDetail]] = None,
        code: ErrorCode = ErrorCode.VALIDATION_ERROR,
    ):
        """Initialize a new validation error."""
        super().__init__(
            code=code,
            message=message,
            exit_code=ExitCode.VALIDATION,
            details=details,
        )


class GeometryError(RodDgError):
    """Exception for boundary geometry violations."""

    def __init__(
        self,
        message: str = "Invalid boundary geometry",
        details: Optional[List[ErrorDetail]] = None,
        code: ErrorCode = ErrorCode.GEOMETRY_ERROR,
    ):
        """Initialize a new geometry error."""
        super().__init__(
            code=code,
            message=message,
            exit_code=ExitCode.VALIDATION,
            details=details,
        )


class UnstableRunError(RodDgError):
    """Exception raised when a time-marching run diverges."""

    def __init__(
        self,
        message: str = "Unstable run",
        details: Optional[List[ErrorDetail]] = None,
        steps: Optional[int] = None,
    ):
        """Initialize a new unstable-run error."""
        self.steps = steps
        super().__init__(
            code=ErrorCode.UNSTABLE_RUN,
            message=message,
            exit_code=ExitCode.UNSTABLE,
            details=details,
        )


class NumericalError(RodDgError):
    """Exception for internal numerical failures."""

    def __init__(
        self,
        message: str = "Numerical failure",
        details: Optional[List[ErrorDetail]] = None,
        code: ErrorCode = ErrorCode.NUMERICAL_ERROR,
    ):
        """Initialize a new numerical error."""
        super().__init__(
            code=code,
            message=message,
            exit_code=ExitCode.NUMERICAL,
            details=details,
        )


class EigenSolverError(NumericalError):
    """Exception raised when the dense eigensolver fails or mis-validates."""

    def __init__(self, message: str = "Eigenvalue computation failed", details=None):
        super().__init__(message, details, ErrorCode.EIGENSOLVER_FAILURE)


class SingularSystemError(NumericalError):
    """Exception raised for singular or badly solved linear systems."""

    def __init__(self, message: str = "Singular linear system", details=None):
        super().__init__(message, details, ErrorCode.SINGULAR_SYSTEM)


class RankDeficientError(NumericalError):
    """Exception raised when constraint evaluations lack full column rank."""

    def __init__(self, message: str = "Rank-deficient constraint set", details=None):
        super().__init__(message, details, ErrorCode.RANK_DEFICIENT)


def exit_code_for(exc: BaseException) -> int:
    """
    Map an exception to the CLI exit code.

    Args:
        exc: Raised exception

    Returns:
        Exit code (1 validation, 2 unstable run, 3 numerical/internal)
    """
    if isinstance(exc, RodDgError):
        return int(exc.exit_code)
    return int(ExitCode.NUMERICAL)


def report_error(exc: BaseException) -> ErrorResponse:
    """
    Log an exception and build its report model.

    Args:
        exc: Raised exception

    Returns:
        Error report
    """
    if isinstance(exc, RodDgError):
        logger.error(
            f"{type(exc).__name__}: {exc.code.value} - {exc.message}",
            extra={
                "error_code": exc.code.value,
                "error_details": [detail.model_dump() for detail in exc.details],
            },
        )
        return exc.to_response()

    logger.exception(f"Unhandled exception: {exc}")
    return ErrorResponse(
        code=ErrorCode.INTERNAL_ERROR.value,
        message=f"An unexpected error occurred: {exc}",
        exit_code=int(ExitCode.NUMERICAL),
    )
