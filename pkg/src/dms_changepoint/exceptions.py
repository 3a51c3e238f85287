"""Exception and warning types shared across the package."""


class DMSError(Exception):
    """Base class for all package errors."""


class InputError(DMSError, ValueError):
    """Malformed data: wrong shape, non-finite values, unparsable cells."""


class DegenerateColumnError(InputError):
    """One or more columns have a zero (or undefined) scale estimate.

    ``columns`` holds the offending 1-based column numbers.
    """

    def __init__(self, columns, what="scale estimate"):
        self.columns = tuple(int(c) for c in columns)
        shown = ", ".join(str(c) for c in self.columns[:10])
        if len(self.columns) > 10:
            shown += ", ..."
        noun = "column" if len(self.columns) == 1 else "columns"
        super().__init__(f"degenerate {noun} {shown}: {what} is zero")


class CalibrationError(DMSError, ArithmeticError):
    """A null-distribution calibration is undefined for the given inputs."""


class ConfigError(DMSError, ValueError):
    """Invalid experiment or command configuration."""


class ClippedVarianceWarning(UserWarning):
    """A long-run variance estimate was non-positive and was clipped."""


class ClampedPValueWarning(UserWarning):
    """A zero p-value was clamped before taking logarithms."""
