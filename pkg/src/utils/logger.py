"""Logger configuration for the nilorbit command line and library."""

import logging
import sys
from pathlib import Path
from typing import Optional

ROOT_LOGGER = "nilorbit"

# Library modules log under their import path
PACKAGE_LOGGERS = ("src",)

CONSOLE_FORMAT = "%(levelname)s - %(message)s"
FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(
    log_level: str = "INFO",
    log_file: Optional[Path] = None,
    module_name: str = ROOT_LOGGER,
) -> logging.Logger:
    """Configure logging for a nilorbit run.

    Console output goes to stderr so that reports written to stdout stay
    machine-readable. Runs that pass ``log_file`` also keep a timestamped
    log next to their report.

    Args:
        log_level: Logging level as string (default: "INFO")
        log_file: Optional path to log file (default: None)
        module_name: Name of the root logger (default: "nilorbit")

    Returns:
        logging.Logger: The configured root logger
    """
    # Convert string log level to logging constant
    numeric_level = getattr(logging, log_level.upper(), logging.INFO)

    # Create logger
    logger = logging.getLogger(module_name)
    logger.setLevel(numeric_level)

    # Remove handlers left over from an earlier run in the same process
    logger.handlers.clear()

    # Console handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    console_handler.setLevel(numeric_level)
    logger.addHandler(console_handler)

    # File handler (if log_file specified)
    if log_file:
        try:
            # Ensure the report directory exists
            log_file.parent.mkdir(parents=True, exist_ok=True)

            file_handler = logging.FileHandler(log_file, encoding="utf-8")
            file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
            file_handler.setLevel(numeric_level)
            logger.addHandler(file_handler)

            logger.info(f"Logging to file: {log_file}")
        except OSError as e:
            logger.error(f"Failed to setup file logging: {e}")

    # Share the handlers with the library loggers
    for name in PACKAGE_LOGGERS:
        package_logger = logging.getLogger(name)
        package_logger.setLevel(numeric_level)
        package_logger.handlers = list(logger.handlers)
        package_logger.propagate = False

    logger.debug(f"Logging initialized at {log_level} level")
    return logger
