"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside its admissible domain."""


class ContractViolationError(ValueError):
    """An input breaks an operation's precondition (e.g. an unnormalized state)."""


class BoundaryOverflowError(RuntimeError):
    """Amplitude would be shifted off the finite lattice."""


class NumericFailureError(ArithmeticError):
    """A cost evaluation returned a non-finite value.

    The offending parameter vector is kept on ``w``.
    """

    def __init__(self, message, w=None):
        super().__init__(message)
        self.w = w


class InconsistentDataError(ValueError):
    """Measured intensities are not admissible for any amplitude pair."""


class BatchError(RuntimeError):
    """Too many individual runs of a batch failed."""
