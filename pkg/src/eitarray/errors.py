"""Exception hierarchy shared across the package."""


class EitArrayError(Exception):
    """Base class for all numerical and physical failures in this package."""
