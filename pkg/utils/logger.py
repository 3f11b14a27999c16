#!/usr/bin/env python3
"""
Logging configuration for Residex
"""

import logging
import sys

from config import DEBUG_MODE


def setup_logger():
    """Configure and return the application logger"""
    logger = logging.getLogger("residex")

    # Set the log level based on DEBUG_MODE
    logger.setLevel(logging.DEBUG if DEBUG_MODE else logging.INFO)

    # Console handler on stderr; stdout carries command output
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.DEBUG if DEBUG_MODE else logging.INFO)

    # Set format
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    console_handler.setFormatter(formatter)

    # Add handler to logger
    logger.addHandler(console_handler)

    return logger


def set_level(level: str):
    """Apply a --log-level override to the logger and its handlers"""
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ValueError(f"Unknown log level: {level}")
    logger.setLevel(numeric)
    for handler in logger.handlers:
        handler.setLevel(numeric)


# Create the logger instance
logger = setup_logger()
