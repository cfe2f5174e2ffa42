from typing import Optional


class StrayError(Exception):
    """Base class for every error raised by the detection library."""


class ConfigError(StrayError, ValueError):
    """A parameter lies outside its permitted range."""


class DataValidationError(StrayError, ValueError):
    """
    Input data violates the DataMatrix contract.
    Carries the offending cell when it is known (0-based row/column).
    """
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None) -> None:
        super().__init__(message)
        self.row = row
        self.column = column


class InsufficientDataError(StrayError, ValueError):
    """Not enough observations for the requested operation."""


class SampleTooSmallError(InsufficientDataError):
    """Fewer scores than the threshold estimator needs."""


class WindowError(StrayError):
    """A core error raised while processing one streaming window."""
    def __init__(self, window_id: int, message: str) -> None:
        super().__init__(f"window {window_id}: {message}")
        self.window_id = window_id
