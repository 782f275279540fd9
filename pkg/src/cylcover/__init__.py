"""Simulation toolkit for the Poisson cylinder cover process in R^d."""

__version__ = "0.1.0"

class UsageError(ValueError):
    """Invalid arguments or configuration (CLI exit code 1)."""


class ResourceError(RuntimeError):
    """A safety cap was exceeded (CLI exit code 2)."""
