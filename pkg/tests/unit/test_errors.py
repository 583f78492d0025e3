"""
Tests for the error handling utilities.
"""

import pytest

from src.utils.errors import (
    EigenSolverError,
    ErrorCode,
    ErrorDetail,
    ErrorResponse,
    ExitCode,
    GeometryError,
    NumericalError,
    RankDeficientError,
    RodDgError,
    SingularSystemError,
    UnstableRunError,
    ValidationError,
    exit_code_for,
    report_error,
)


def test_error_response_model():
    """Test the error response model."""
    error = ErrorResponse(
        code=ErrorCode.DISTANCE_OUT_OF_RANGE.value,
        message="Test error",
        exit_code=1,
        details=[ErrorDetail(param="d", value=1.5, message="|d| <= dx required")],
    )

    assert error.code == "2001"
    assert error.exit_code == 1
    assert error.details[0].param == "d"
    assert error.details[0].value == 1.5


def test_base_error():
    """Test the base toolkit error class."""
    error = RodDgError(
        code=ErrorCode.INTERNAL_ERROR,
        message="Test error",
        details=[ErrorDetail(message="detail")],
    )

    assert str(error) == "Test error"
    assert error.exit_code == ExitCode.NUMERICAL
    response = error.to_response()
    assert response.code == "5000"
    assert response.exit_code == 3
    assert len(response.details) == 1


@pytest.mark.parametrize(
    "error,code,exit_code",
    [
        (ValidationError("bad flag"), ErrorCode.VALIDATION_ERROR, 1),
        (ValidationError("bad", code=ErrorCode.NOT_SPD), ErrorCode.NOT_SPD, 1),
        (GeometryError("far"), ErrorCode.GEOMETRY_ERROR, 1),
        (UnstableRunError("diverged", steps=12), ErrorCode.UNSTABLE_RUN, 2),
        (NumericalError("failed"), ErrorCode.NUMERICAL_ERROR, 3),
        (EigenSolverError(), ErrorCode.EIGENSOLVER_FAILURE, 3),
        (SingularSystemError(), ErrorCode.SINGULAR_SYSTEM, 3),
        (RankDeficientError(), ErrorCode.RANK_DEFICIENT, 3),
    ],
)
def test_error_codes_and_exit_codes(error, code, exit_code):
    """Test the code and exit code of every error class."""
    assert error.code == code
    assert exit_code_for(error) == exit_code


def test_unstable_run_keeps_steps():
    """Test that the step count survives on the exception."""
    error = UnstableRunError("diverged", steps=42)
    assert error.steps == 42


def test_exit_code_for_unknown_exception():
    """Test that foreign exceptions map to the numerical-failure exit code."""
    assert exit_code_for(RuntimeError("boom")) == 3


def test_report_error():
    """Test the error report of toolkit and foreign exceptions."""
    response = report_error(GeometryError("far", code=ErrorCode.GEOMETRY_MISMATCH))
    assert response.code == "2002"
    assert response.message == "far"

    response = report_error(KeyError("x"))
    assert response.code == ErrorCode.INTERNAL_ERROR.value
    assert response.exit_code == 3
