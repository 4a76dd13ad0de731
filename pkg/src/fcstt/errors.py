"""Exception hierarchy shared across the package."""


class FcsError(Exception):
    """Base class for all errors raised by fcstt."""


class DimensionError(FcsError, ValueError):
    pass


class ModelTooLargeError(FcsError, ValueError):
    """Requested Hilbert space exceeds the configured maximum."""


class NotHermitianError(FcsError, ValueError):
    pass


class SingularBasisError(FcsError, ValueError):
    def __init__(self, message, condition_number):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class IncompleteDataError(FcsError, ValueError):
    """A dataset, map family or history is missing required entries."""


class StencilError(FcsError, ValueError):
    """Finite-difference stencil points are missing from the lambda grid."""


class ZeroCrossingError(FcsError, ArithmeticError):
    """Generating function vanishes where its logarithm is needed."""

    def __init__(self, lam, time):
        super().__init__(f"generating function vanishes at lambda={lam!r}, t={time!r}")
        self.lam = lam
        self.time = time


class ConfigError(FcsError, ValueError):
    pass


class ContractViolation(FcsError, RuntimeError):
    """A hard numerical invariant was breached."""
