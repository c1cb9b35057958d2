"""Exception hierarchy shared by every module."""


class ChainError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ChainError, ValueError):
    """Subsets or families with mismatched ground-set sizes."""


class DomainError(ChainError, ValueError):
    """Arguments outside the mathematical domain of an operation."""


class CapabilityError(ChainError, ValueError):
    """Inputs beyond what an operation is built to handle (size guards)."""


class InternalInvariantError(ChainError, RuntimeError):
    """A guaranteed property failed to hold; indicates a bug."""
