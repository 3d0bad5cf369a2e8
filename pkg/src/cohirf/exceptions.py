"""Exception types raised across the package."""


class CohirfError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(CohirfError, ValueError):
    """A parameter is outside its admissible range."""


class InvalidDataError(CohirfError, ValueError):
    """Input data is malformed, e.g. contains NaN or infinite entries."""


class LoadError(CohirfError, ValueError):
    """A dataset file could not be parsed.

    The message carries the row/column location when one is known.
    """


class HierarchyError(CohirfError, RuntimeError):
    """A hierarchy tree violates its structural invariants."""
