"""Exception types raised across the package."""


class PqaoaError(Exception):
    """Base class for package errors."""


class DimensionError(PqaoaError, ValueError):
    """An assignment, state or parameter vector has the wrong size."""


class SizeError(PqaoaError, ValueError):
    """A problem exceeds a configured enumeration or simulation cap."""


class ValidationError(PqaoaError, ValueError):
    """A model, graph or configuration is structurally invalid."""


class InvalidInstanceError(ValidationError):
    """A routing instance cannot be encoded."""


class NotSeparableError(PqaoaError, ValueError):
    """Removing the requested terms does not split the interaction graph."""


class RecombinationCapError(PqaoaError, ValueError):
    """The Cartesian product of slice samples exceeds the configured cap."""


class OptimizerAbort(PqaoaError, RuntimeError):
    """The objective returned a non-finite value.

    The partial trace is attached as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
