"""
Utility modules for uss_sim.
"""

from .exceptions import UssError, ErrorType, ErrorCode
from .logging import configure_logging

__all__ = ["UssError", "ErrorType", "ErrorCode", "configure_logging"]
