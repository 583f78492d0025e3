"""
Tests for the logging setup.
"""

import logging

from src.utils.logging import PACKAGE_LOGGER, configure_logging, get_logger


def test_console_level():
    """Test that the requested level reaches the package logger."""
    assert configure_logging(log_level="info") == "INFO"
    assert logging.getLogger(PACKAGE_LOGGER).level == logging.INFO
    assert get_logger("src.stability.maps").getEffectiveLevel() == logging.INFO


def test_unknown_level_falls_back(capsys):
    """Test that an unknown level is reported and replaced."""
    assert configure_logging(log_level="chatty") == "WARNING"
    assert "Unknown log level" in capsys.readouterr().err


def test_records_go_to_stderr(capsys):
    """Test that stdout stays free of log records."""
    configure_logging(log_level="INFO")
    get_logger("src.solver.manufactured").info("run finished")
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "run finished" in captured.err


def test_log_file(tmp_path):
    """Test that the rotating file receives DEBUG records."""
    log_file = tmp_path / "logs" / "rod-dg.log"
    configure_logging(log_level="WARNING", log_file=str(log_file))
    get_logger("src.boundary.corrections").debug("cached stencil")
    for handler in logging.getLogger(PACKAGE_LOGGER).handlers:
        handler.flush()
    assert "cached stencil" in log_file.read_text(encoding="utf8")
    configure_logging()


def test_config_file_replaces_defaults(tmp_path):
    """Test a YAML dictConfig file."""
    config_file = tmp_path / "logging.yaml"
    config_file.write_text(
        "version: 1\n"
        "handlers:\n"
        "  console: {class: logging.StreamHandler, stream: 'ext://sys.stderr'}\n"
        "loggers:\n"
        "  src: {handlers: [console]}\n"
    )
    assert configure_logging(config_path=str(config_file), log_level="ERROR") == "ERROR"
    assert logging.getLogger(PACKAGE_LOGGER).level == logging.ERROR
    configure_logging()
