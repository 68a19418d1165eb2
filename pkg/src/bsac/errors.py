"""Exception hierarchy shared across the package.

Input and domain problems are ValueErrors so that careless callers still
get a sensible category; numerical failures are RuntimeErrors.
"""


class BsacError(Exception):
    """Base class for all package errors."""


class InputError(BsacError, ValueError):
    """Malformed argument or configuration value."""


class DomainError(BsacError, ValueError):
    """Point lies outside the effective domain of a graph."""


class NumericalError(BsacError, RuntimeError):
    """A numerical procedure failed (root-find, linear solve)."""


class DivergenceError(NumericalError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message, substep=None, t=None):
        super().__init__(message)
        self.substep = substep
        self.t = t


class FitError(BsacError, RuntimeError):
    """Not enough usable rows for a rate fit."""
