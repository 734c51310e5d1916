# services/errors.py

from typing import Any, Dict, Optional


class XLF5Error(Exception):
    """Base exception for every failure raised by the pipeline."""

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}


class InvalidInput(XLF5Error):
    exit_code = 3


class ConfigMismatch(XLF5Error):
    exit_code = 4


class ConfigError(XLF5Error):
    exit_code = 4


class UsageError(XLF5Error):
    exit_code = 2


class ParseError(InvalidInput):
    def __init__(self, message: str, line: Optional[int] = None, **details):
        super().__init__(message, {"line": line, **details})
        self.line = line


class ValidationError(InvalidInput):
    def __init__(self, message: str, utt_id: Optional[str] = None, **details):
        super().__init__(message, {"utt_id": utt_id, **details})
        self.utt_id = utt_id


class EmptyAfterSanitize(ValidationError):
    pass


class NoEligibleBoundary(ValidationError):
    pass


class InvalidBoundary(InvalidInput):
    pass


class InvalidRate(InvalidInput):
    pass


class InvalidDataset(InvalidInput):
    pass


class ShapeError(InvalidInput):
    pass


class InvalidMask(InvalidInput):
    pass


class InvalidCoefficient(InvalidInput):
    pass


class DivergedError(XLF5Error):
    def __init__(self, message: str, step: int):
        super().__init__(message, {"step": step})
        self.step = step


class TextOverflow(InvalidInput):
    pass


class DegenerateSplit(InvalidInput):
    pass


class DurationOutOfRange(InvalidInput):
    pass


class MetricPluginError(XLF5Error):
    pass
