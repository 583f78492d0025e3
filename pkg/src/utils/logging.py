"""
Logging setup for the command-line front end and the library modules.

Results (tables, CSV rows, eigenvalues) never pass through the logger. Log
records go to stderr, so stdout can be piped into a CSV file, and optionally
to a rotating file that keeps DEBUG detail such as per-node verdicts.
"""

import copy
import logging
import logging.config
import os
import sys
from typing import Any, Dict, Optional

import yaml

PACKAGE_LOGGER = "src"
LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
LOG_FILE_MAX_BYTES = 5 * 1024 * 1024
LOG_FILE_BACKUPS = 3

BASE_CONFIG: Dict[str, Any] = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "console": {"format": "%(levelname)s %(name)s: %(message)s"},
        "file": {
            "format": "%(asctime)s %(levelname)s %(threadName)s %(name)s:%(lineno)d %(message)s"
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "level": "WARNING",
            "formatter": "console",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        PACKAGE_LOGGER: {"handlers": ["console"], "level": "WARNING", "propagate": False},
    },
}


def _read_config_file(config_path: str) -> Optional[Dict[str, Any]]:
    try:
        with open(config_path, "r") as file:
            return yaml.safe_load(file) or None
    except (OSError, yaml.YAMLError) as e:
        print(f"Ignoring logging config {config_path}: {e}", file=sys.stderr)
        return None


def _add_file_handler(config: Dict[str, Any], log_file: str) -> None:
    directory = os.path.dirname(log_file)
    if directory:
        os.makedirs(directory, exist_ok=True)
    config.setdefault("formatters", {}).setdefault("file", BASE_CONFIG["formatters"]["file"])
    config.setdefault("handlers", {})["file"] = {
        "class": "logging.handlers.RotatingFileHandler",
        "level": "DEBUG",
        "formatter": "file",
        "filename": log_file,
        "maxBytes": LOG_FILE_MAX_BYTES,
        "backupCount": LOG_FILE_BACKUPS,
        "encoding": "utf8",
    }
    package = config.setdefault("loggers", {}).setdefault(PACKAGE_LOGGER, {"handlers": []})
    handlers = package.setdefault("handlers", [])
    if "file" not in handlers:
        handlers.append("file")
    # The file keeps DEBUG records even when the console is quieter.
    package["level"] = "DEBUG"


def configure_logging(
    config_path: Optional[str] = None,
    log_level: Optional[str] = None,
    log_file: Optional[str] = None,
) -> str:
    """
    Configure the package logger.

    Args:
        config_path: Optional YAML dictConfig replacing the built-in one
        log_level: Console level, one of DEBUG, INFO, WARNING, ERROR, CRITICAL
        log_file: Optional rotating log file receiving DEBUG records

    Returns:
        Effective console level
    """
    config: Dict[str, Any] = copy.deepcopy(BASE_CONFIG)
    if config_path and os.path.exists(config_path):
        config = _read_config_file(config_path) or config

    level = (log_level or "WARNING").upper()
    if level not in LEVELS:
        print(f"Unknown log level {log_level!r}, using WARNING", file=sys.stderr)
        level = "WARNING"
    if "console" in config.get("handlers", {}):
        config["handlers"]["console"]["level"] = level
    package = config.setdefault("loggers", {}).setdefault(PACKAGE_LOGGER, {})
    package["level"] = level

    if log_file:
        _add_file_handler(config, log_file)

    try:
        logging.config.dictConfig(config)
    except (ValueError, TypeError, AttributeError, ImportError) as e:
        print(f"Invalid logging configuration ({e}), using stderr only", file=sys.stderr)
        logging.basicConfig(
            level=level,
            format=BASE_CONFIG["formatters"]["console"]["format"],
            handlers=[logging.StreamHandler(sys.stderr)],
        )
    return level


def get_logger(name: str) -> logging.Logger:
    """Logger for a module; pass ``__name__`` so records land under the package logger."""
    return logging.getLogger(name)
