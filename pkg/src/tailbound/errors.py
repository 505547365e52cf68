"""Exception types shared across the package."""


class TailboundError(Exception):
    """Base class for all package errors."""


class DomainError(TailboundError, ValueError):
    """A parameter or evaluation point is outside its legal domain."""


class PreconditionError(TailboundError, ValueError):
    """A documented precondition is violated (e.g. side/threshold mismatch)."""


class SingularityError(DomainError):
    """Evaluation requested exactly at a removable singularity."""


class UnsupportedFamilyError(TailboundError, ValueError):
    """The requested operation is not defined for this distribution family."""


class CapacityError(TailboundError, RuntimeError):
    """An exact computation would exceed the configured size limits."""


class BracketError(TailboundError, RuntimeError):
    """Numeric bracket expansion failed (objective undefined on the bracket)."""
