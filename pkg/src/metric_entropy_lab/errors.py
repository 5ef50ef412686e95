"""Exception types shared across the package."""


class LabError(ValueError):
    """Base class for every validation error raised by this package."""


class DomainError(LabError):
    """An argument lies outside the domain of the operation."""


class GridMismatchError(LabError):
    """Two sampled functions (or point sets) do not share a grid."""


class InvariantError(LabError):
    """A constructed object violates one of its structural invariants."""


class TooLargeForExactSearch(LabError):
    """Exhaustive search was requested above the configured size threshold."""


class InsufficientDataError(LabError):
    """Too few usable entries to fit or summarise."""


class PreconditionError(LabError):
    """A documented precondition could not be certified."""


class AuditError(LabError):
    """A smoothness / separation audit failed at construction time."""
