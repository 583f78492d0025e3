"""
ROD_DG_* environment overrides.

Variables are read from the process environment, optionally after loading a
.env file. None of them is required; a malformed value is a configuration
error, never silently replaced by a default.
"""

import os
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

from dotenv import load_dotenv

ENV_PREFIX = "ROD_DG_"


def load_env_file(env_file: Optional[Union[str, Path]] = None) -> bool:
    """
    Load ROD_DG_* variables from a .env file without overriding the environment.

    Args:
        env_file: Path to the file; None searches the working directory and its parents

    Returns:
        True if a file was found and read
    """
    if env_file:
        return load_dotenv(env_file, override=False)
    return load_dotenv(dotenv_path=None, override=False)


def env_name(suffix: str) -> str:
    """Full variable name of an override suffix."""
    return f"{ENV_PREFIX}{suffix}"


def get_env(suffix: str, default: Optional[str] = None) -> Optional[str]:
    """Raw value of ROD_DG_<suffix>; blank counts as unset."""
    value = os.getenv(env_name(suffix))
    if value is None or not value.strip():
        return default
    return value.strip()


def get_env_int(suffix: str, default: Optional[int] = None) -> Optional[int]:
    """
    Integer value of ROD_DG_<suffix>.

    Raises:
        ValueError: If the variable is set but is not an integer
    """
    value = get_env(suffix)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{env_name(suffix)} must be an integer, got {value!r}")


def get_env_float(suffix: str, default: Optional[float] = None) -> Optional[float]:
    """
    Real value of ROD_DG_<suffix>.

    Raises:
        ValueError: If the variable is set but is not a number
    """
    value = get_env(suffix)
    if value is None:
        return default
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"{env_name(suffix)} must be a number, got {value!r}")


def _get_env_upper(suffix: str) -> Optional[str]:
    value = get_env(suffix)
    return None if value is None else value.upper()


# suffix -> (path inside the configuration document, reader)
OVERRIDES: Dict[str, Tuple[Tuple[str, ...], Callable[[str], Any]]] = {
    "THREADS": (("threads",), get_env_int),
    "LOGGING_LEVEL": (("logging", "level"), _get_env_upper),
    "LOGGING_FILE": (("logging", "log_file"), get_env),
    "ANALYSIS_CELLS": (("analysis", "cells"), get_env_int),
    "ANALYSIS_AMPLIFICATION_TOLERANCE": (("analysis", "amplification_tolerance"), get_env_float),
    "ANALYSIS_CFL_BISECTION_TOLERANCE": (("analysis", "cfl_bisection_tolerance"), get_env_float),
}


def environment_overrides() -> Dict[str, Any]:
    """
    Nested configuration document built from the ROD_DG_* variables that are set.

    Returns:
        Dictionary shaped like config.yaml, empty if nothing is set

    Raises:
        ValueError: If a variable cannot be parsed
    """
    document: Dict[str, Any] = {}
    for suffix, (path, read) in OVERRIDES.items():
        value = read(suffix)
        if value is None:
            continue
        section = document
        for key in path[:-1]:
            section = section.setdefault(key, {})
        section[path[-1]] = value
    return document
