"""Exception types raised across the package.

All of them subclass ``ValueError`` so callers that only care about bad
input can catch that; the CLI maps each class onto its own exit code.
"""


class PnmFormatError(ValueError):
    """Malformed or unsupported binary greymap (P5) data."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DivisibilityError(ValueError):
    """Block size does not evenly divide an image dimension."""


class DegenerateDataError(ValueError):
    """Input is statistically degenerate (e.g. zero within-group variance)."""


class UndefinedMetricError(ValueError):
    """Metric is undefined for the given input (e.g. a single-class label set)."""
