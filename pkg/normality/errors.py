"""Exception hierarchy for the N-test toolkit."""


class NTestError(Exception):
    """Base class for every error raised on purpose by this package."""


class DomainError(NTestError, ValueError):
    """Argument outside the mathematical domain of a function."""


class InvalidPartition(NTestError, ValueError):
    """Quantile interval violating 0 <= alpha < beta <= 1."""


class InvalidSpec(NTestError, ValueError):
    """Alternative distribution specification with invalid parameters."""


class EmptyConditioningSet(NTestError, ValueError):
    """No order statistics fall into the conditioning set."""


class DegenerateVariance(NTestError, ValueError):
    """Variance is zero or undefined for the requested estimator."""


class SampleTooSmall(NTestError, ValueError):
    """Sample shorter than the estimator or test requires."""


class SampleTooLarge(NTestError, ValueError):
    """Sample longer than the estimator or test supports."""


class MissingCalibration(NTestError, LookupError):
    """No calibrated critical value for the requested (statistic, n, level, side)."""


class InsufficientData(NTestError, ValueError):
    """Series too short to form a single window."""


class NonPositivePrice(NTestError, ValueError):
    """Price series contains zero or negative values."""


class CalibrationFormatError(NTestError, ValueError):
    """Calibration file is truncated or has an unknown header."""


class InputError(NTestError, ValueError):
    """User input (files, flags) could not be used."""
