"""Exception types shared across the toolkit."""


class NumericalFailure(RuntimeError):
    """An underlying numerical routine (eigensolver, conic solver) did not converge."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class EmptyCompositionError(ValueError):
    """A barrier composition was requested over an empty list."""


class DuplicatePinError(ValueError):
    """Two equality pins target the same control channel."""


class ZeroGradientError(ValueError):
    """A scalar constraint row has zero gradient and is violated: no control can fix it."""


class EmptyTraceError(ValueError):
    """Metrics requested on a trace with no records."""


class ConfigError(ValueError):
    """A run configuration failed validation; the message names the offending key."""


class PortInUse(OSError):
    """The requested TCP port is already bound."""


class SolverHalt(RuntimeError):
    """The closed loop stopped early because the filter became infeasible or failed.

    Carries the step index, the reason string, and the partial trace recorded
    up to (and including) the failing step.
    """

    def __init__(self, step: int, reason: str, trace):
        super().__init__(f"solver halt at step {step}: {reason}")
        self.step = step
        self.reason = reason
        self.trace = trace
