"""Exception hierarchy shared by all modules."""


class RobustIAError(Exception):
    """Base class for every error raised by the package."""

    category = "error"


class DimensionError(RobustIAError, ValueError):
    """Array shapes disagree with the declared dimensions."""

    category = "structural"


class ConfigError(RobustIAError, ValueError):
    """Inconsistent configuration (integrator grid, schedule, options)."""

    category = "config"


class GainError(ConfigError):
    """Controller gains violate their required inequalities."""


class NumericError(RobustIAError, ArithmeticError):
    """A non-finite value appeared in an evaluation."""

    category = "numeric"


class DivergenceError(NumericError):
    """Integration produced a non-finite state.

    ``last_good_time`` is the last sample time at which the state was finite.
    """

    category = "runtime"

    def __init__(self, message, last_good_time):
        super().__init__(message)
        self.last_good_time = last_good_time
