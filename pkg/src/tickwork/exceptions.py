"""Exception hierarchy shared across the package."""


class TickworkError(Exception):
    """Base class for all errors raised by tickwork."""


class NumericalError(TickworkError):
    """A numerical routine failed (non-convergence, degeneracy, ...)."""


class ConvergenceError(NumericalError):
    pass


class NonUniqueSteadyStateError(NumericalError):
    def __init__(self, message="non-unique steady state"):
        super().__init__(message)


class StateInvariantError(NumericalError):
    """A simulated density matrix stopped being a valid state."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class ConfigError(TickworkError, ValueError):
    """Invalid model parameters, simulation plan or experiment config."""


class StepTooLargeError(ConfigError):
    pass


class ImpossibleEventError(TickworkError):
    pass


class NoTicksError(TickworkError, ValueError):
    def __init__(self, message="clock does not tick"):
        super().__init__(message)
