"""
Utility functions for Residex
"""

from utils.logger import logger, set_level

__all__ = ['logger', 'set_level']
