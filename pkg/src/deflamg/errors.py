"""Exception taxonomy shared by all deflamg modules."""


class DeflamgError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DeflamgError):
    """Operands have incompatible shapes."""


class StructureError(DeflamgError):
    """A matrix violates a structural requirement (e.g. missing/zero diagonal)."""


class SingularMatrixError(DeflamgError):
    """A factorization hit a zero (or below-tolerance) pivot."""


class PartitionError(DeflamgError):
    """A row partition is malformed or incompatible with the matrix."""


class CommunicatorError(DeflamgError):
    """A collective was called inconsistently (wrong participant count or shapes)."""


class BreakdownError(DeflamgError):
    """A Krylov recurrence broke down (used internally; solvers report, not raise)."""


class ParseError(DeflamgError):
    """A file could not be parsed; message carries the 1-based line number."""


class ConfigError(DeflamgError):
    """A configuration tree contains an unknown key or a badly typed value."""
