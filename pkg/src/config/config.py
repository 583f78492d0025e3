"""
Configuration management for the embedded-boundary DG toolkit.

This module handles loading and validating configuration from YAML files and
environment variables. Command-line flags override both.
"""

import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator

from src.boundary.corrections import CorrectionKind
from src.stability.spectrum import Integrator
from src.utils.environment import environment_overrides


class AnalysisConfig(BaseModel):
    """Settings of the eigenspectrum analysis."""

    cells: int = Field(2, description="Number of cells of the analysed system")
    amplification_tolerance: float = Field(
        1e-8, description="Amplification above 1 + tolerance is unstable"
    )
    cfl_bisection_tolerance: float = Field(
        1e-6, description="Bisection tolerance of the periodic CFL calibration"
    )

    @field_validator("cells")
    @classmethod
    def validate_cells(cls, v: int) -> int:
        """Validate that the analysed system has at least two cells."""
        if v < 2:
            raise ValueError("cells must be at least 2")
        return v


class MapGridConfig(BaseModel):
    """Grid of a (d, CFL) stability map."""

    d_min: float = Field(-1.0, description="Smallest distance (units of dx)")
    d_max: float = Field(1.0, description="Largest distance (units of dx)")
    d_step: float = Field(0.01, description="Distance step")
    cfl_hi: float = Field(1.0, description="Largest normalized CFL")
    cfl_points: int = Field(100, description="Number of CFL nodes in (0, cfl_hi]")

    @field_validator("cfl_hi")
    @classmethod
    def validate_cfl_hi(cls, v: float) -> float:
        """Validate that cfl_hi is one of the supported panel ranges."""
        if v not in (1.0, 10.0):
            raise ValueError("cfl_hi must be 1 or 10")
        return v

    @field_validator("d_step")
    @classmethod
    def validate_d_step(cls, v: float) -> float:
        """Validate that d_step is positive."""
        if v <= 0:
            raise ValueError("d_step must be positive")
        return v

    @field_validator("cfl_points")
    @classmethod
    def validate_cfl_points(cls, v: int) -> int:
        """Validate that the CFL axis has at least one node."""
        if v < 1:
            raise ValueError("cfl_points must be positive")
        return v

    @model_validator(mode="after")
    def validate_range(self) -> "MapGridConfig":
        """Validate that the distance range lies inside [-1, 1]."""
        if not -1.0 <= self.d_min <= self.d_max <= 1.0:
            raise ValueError("distance range must satisfy -1 <= d_min <= d_max <= 1")
        return self

    def distances(self) -> List[float]:
        """Distance nodes from d_min to d_max, rounded to kill accumulation noise."""
        count = int(round((self.d_max - self.d_min) / self.d_step))
        return [round(self.d_min + k * self.d_step, 12) for k in range(count + 1)]

    def cfls(self) -> List[float]:
        """Normalized CFL nodes k * cfl_hi / cfl_points, k = 1..cfl_points."""
        return [
            round(k * self.cfl_hi / self.cfl_points, 12)
            for k in range(1, self.cfl_points + 1)
        ]


class RunConfig(BaseModel):
    """Configuration of one manufactured-solution run."""

    p: int = Field(1, description="Polynomial degree")
    method: CorrectionKind = Field(CorrectionKind.ROD_E, description="Embedded boundary treatment")
    integrator: Integrator = Field(Integrator.EXPLICIT, description="Time integrator")
    cells: int = Field(20, description="Number of mesh cells")
    d: float = Field(-1.0, description="Signed boundary distance in units of dx")
    cfl: float = Field(1.0, description="Normalized CFL")
    steady_tol: float = Field(1e-13, description="Relative steady-state increment")
    max_steps: Optional[int] = Field(
        None, description="Step budget (None: 1e6 explicit, 1e5 implicit)"
    )
    divergence_limit: float = Field(1e6, description="Max-norm declaring divergence")
    x_left: float = Field(0.0, description="Left end of the mesh")
    x_right: float = Field(2.0, description="Right end of the mesh")
    weight: Optional[List[List[float]]] = Field(
        None, description="SPD weight matrix for rod-w"
    )

    @field_validator("p")
    @classmethod
    def validate_p(cls, v: int) -> int:
        """Validate the supported degree range."""
        if not 0 <= v <= 12:
            raise ValueError("p must be between 0 and 12")
        return v

    @field_validator("cells")
    @classmethod
    def validate_cells(cls, v: int) -> int:
        """Validate that the mesh has at least two cells."""
        if v < 2:
            raise ValueError("cells must be at least 2")
        return v

    @field_validator("d")
    @classmethod
    def validate_d(cls, v: float) -> float:
        """Validate that the boundary lies within one cell of the mesh face."""
        if not -1.0 <= v <= 1.0:
            raise ValueError("d must lie in [-1, 1]")
        return v

    @field_validator("cfl")
    @classmethod
    def validate_cfl(cls, v: float) -> float:
        """Validate that the CFL is positive."""
        if v <= 0:
            raise ValueError("cfl must be positive")
        return v

    @model_validator(mode="after")
    def validate_weight(self) -> "RunConfig":
        """Validate that rod-w runs carry a weight matrix of the right size."""
        if self.method == CorrectionKind.ROD_W:
            if self.weight is None:
                raise ValueError("rod-w requires a weight matrix")
            size = self.p + 1
            if len(self.weight) != size or any(len(row) != size for row in self.weight):
                raise ValueError(f"weight must be a {size}x{size} matrix")
        if self.x_right <= self.x_left:
            raise ValueError("x_right must be larger than x_left")
        return self

    @property
    def step_budget(self) -> int:
        """Maximum number of time steps."""
        if self.max_steps is not None:
            return self.max_steps
        return 1_000_000 if self.integrator == Integrator.EXPLICIT else 100_000


class LoggingConfig(BaseModel):
    """Configuration for logging."""

    level: str = Field("WARNING", description="Default logging level")
    config_file: Optional[str] = Field(
        None, description="Path to logging configuration file"
    )
    log_file: Optional[str] = Field(None, description="Path to log file")


class AppConfig(BaseModel):
    """Main configuration of the toolkit."""

    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    map_grid: MapGridConfig = Field(default_factory=MapGridConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    threads: int = Field(0, description="Worker threads (0 for all cores)")

    @field_validator("threads")
    @classmethod
    def validate_threads(cls, v: int) -> int:
        """Validate that the thread count is non-negative."""
        if v < 0:
            raise ValueError("threads must be non-negative")
        return v


def load_config(config_path: Union[str, Path]) -> AppConfig:
    """
    Load configuration from a YAML file.

    Args:
        config_path: Path to configuration YAML file

    Returns:
        Validated configuration object

    Raises:
        FileNotFoundError: If the configuration file does not exist
        ValueError: If the configuration is invalid
    """
    config_path = Path(config_path)
    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    try:
        with open(config_path, "r") as file:
            config_data: Dict[str, Any] = yaml.safe_load(file) or {}
    except yaml.YAMLError as e:
        raise ValueError(f"Invalid configuration: {e}")

    # Load environment-specific configuration if it exists
    env_config_path = config_path.parent / f"{config_path.stem}.{os.getenv('ENV', 'local')}.yaml"
    if env_config_path.exists():
        with open(env_config_path, "r") as file:
            env_config_data: Dict[str, Any] = yaml.safe_load(file) or {}
            config_data = _deep_merge(config_data, env_config_data)

    try:
        return AppConfig(**config_data)
    except Exception as e:
        raise ValueError(f"Invalid configuration: {e}")


def _deep_merge(base: Dict, override: Dict) -> Dict:
    """
    Deep merge two dictionaries.

    Args:
        base: Base dictionary
        override: Dictionary with values to override in base

    Returns:
        Merged dictionary
    """
    result = base.copy()
    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = _deep_merge(result[key], value)
        else:
            result[key] = value
    return result


def load_config_from_env() -> AppConfig:
    """
    Load configuration from environment variables.

    Environment variables are prefixed with ROD_DG_ and none is required.

    Examples:
        ROD_DG_THREADS=4
        ROD_DG_LOGGING_LEVEL=DEBUG
        ROD_DG_ANALYSIS_CELLS=4

    Returns:
        Validated configuration object with values from environment variables

    Raises:
        ValueError: If a variable is malformed or the result is invalid
    """
    config_data = environment_overrides()
    try:
        return AppConfig(**config_data)
    except Exception as e:
        raise ValueError(f"Invalid environment configuration: {e}")
