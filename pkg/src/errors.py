"""
Exception hierarchy shared by every stage of the detector.

I/O problems are reported with the builtin OSError family and are never
wrapped, so callers can tell a missing file from a malformed one.
"""

from typing import Any, Dict, Optional


class PadError(Exception):
    """Base class for all detector errors"""


class InvalidDataError(PadError, ValueError):
    """Input violates a documented precondition or invariant"""


class FormatError(PadError, ValueError):
    """File or payload does not match the expected format"""


class ConfigError(PadError, ValueError):
    """Configuration problem tied to one key"""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class TrainingError(PadError, RuntimeError):
    """SVM training did not converge within its iteration budget"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
