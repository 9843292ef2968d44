"""
Logging utilities module.
Configures the loguru sinks shared by the CLI and the library modules.
"""

import os
import sys

from loguru import logger

CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"


def setup_logging(log_level="INFO", log_file=None):
    """
    Configure logging for a run.

    Args:
        log_level (str): Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file (str, optional): Path to log file; rotated at 10 MB, kept one week
    """
    logger.remove()
    logger.add(sys.stderr, level=log_level.upper(), format=CONSOLE_FORMAT)

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        logger.add(
            log_file,
            level=log_level.upper(),
            format=FILE_FORMAT,
            rotation="10 MB",
            retention="1 week",
        )

    logger.debug(f"Logging initialized at {log_level.upper()} level")
    if log_file:
        logger.debug(f"Log file: {log_file}")
