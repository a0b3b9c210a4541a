"""Exception hierarchy shared across the package.

The CLI maps ConfigError to exit code 1 and every other SpikecauseError
to exit code 2.
"""


class SpikecauseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SpikecauseError):
    """Invalid configuration value or unusable experiment setup."""


class DimensionError(SpikecauseError):
    """Array shapes incompatible with the requested operation."""


class MaskingError(SpikecauseError):
    """An attention row has no allowed key to attend to."""


class GradientStateError(SpikecauseError):
    """Backward called twice without zeroing gradients, or step without grads."""


class DivergenceError(SpikecauseError):
    """Non-finite values appeared during simulation or training."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DegenerateSeriesError(SpikecauseError):
    """A series column has zero variance where statistics are required."""


class SingularFitError(SpikecauseError):
    """Rank-deficient regressor matrix in a least-squares fit."""


class NormalizationError(SpikecauseError):
    """A row with zero mass cannot be renormalized."""


class UndefinedMetricError(SpikecauseError):
    """Metric undefined for the given inputs (e.g. single-class AUROC)."""
