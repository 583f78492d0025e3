"""
Test configuration and fixtures for the embedded-boundary DG toolkit.

This module provides pytest fixtures and configuration for testing.
"""

import sys
from pathlib import Path
from typing import Dict, Generator

import numpy as np
import pytest

# Add the repository root to the Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config.config import AppConfig, LoggingConfig, MapGridConfig, RunConfig


@pytest.fixture
def test_config() -> AppConfig:
    """Provide a small, single-threaded test configuration."""
    return AppConfig(
        map_grid=MapGridConfig(d_min=-0.2, d_max=0.2, d_step=0.1, cfl_hi=1.0, cfl_points=4),
        logging=LoggingConfig(level="DEBUG", config_file=None, log_file=None),
        threads=1,
    )


@pytest.fixture
def run_config() -> RunConfig:
    """Provide the P1 ROD-E explicit run of the first convergence table."""
    return RunConfig(p=1, method="rod-e", integrator="explicit", cells=20, d=-1.0, cfl=1.0)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator."""
    return np.random.default_rng(20240611)


@pytest.fixture
def test_env_vars(monkeypatch: pytest.MonkeyPatch) -> Generator[Dict[str, str], None, None]:
    """Set up test environment variables."""
    env_vars = {
        "ROD_DG_THREADS": "3",
        "ROD_DG_LOGGING_LEVEL": "DEBUG",
        "ROD_DG_ANALYSIS_CELLS": "4",
    }

    for key, value in env_vars.items():
        monkeypatch.setenv(key, value)

    yield env_vars

    for key in env_vars:
        monkeypatch.delenv(key, raising=False)
