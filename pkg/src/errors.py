"""
Error taxonomy for the navigation toolkit.
Every error is a ValueError so callers that only care about bad input can
catch one type; the CLI maps these to exit status 1.
"""


class NavError(ValueError):
    """Base class for all validation errors raised by the toolkit."""


class UnsupportedAction(NavError):
    """Action kind is not part of the active action space."""


class MalformedSegments(NavError):
    """Merged segments do not tile the frame range."""


class EmptyHistory(NavError):
    """History sampling was asked to pick from no frames."""


class InvalidPolicy(NavError):
    """History or agent policy parameters are out of range."""


class DegenerateDistribution(NavError):
    """Action distribution has non-positive mass or does not sum to one."""


class UnknownAction(NavError):
    """Action token has no entry in the weight table."""


class EmptyBatch(NavError):
    """Loss requested over an empty batch."""


class NumericalUnderflow(NavError):
    """A target token was assigned zero probability."""


class ShapeMismatch(NavError):
    """Matrix dimensions are inconsistent."""


class FrameOrderError(NavError):
    """Visual blocks are not in strictly increasing frame order."""


class InvalidMagnitude(NavError):
    """Command magnitude is not a positive multiple of the step size."""


class UnparsableAction(NavError):
    """No action verb of the active vocabulary was found in the text."""


class EmptyEvaluation(NavError):
    """Aggregation requested over zero episodes."""


class SchemaViolation(NavError):
    """Episode record does not match the storage schema."""

    def __init__(self, message: str, line_number: int = None):
        super().__init__(message)
        self.line_number = line_number
