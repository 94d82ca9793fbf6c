"""Exception hierarchy.

Everything derives from ``ValueError`` so callers that only care about
"bad input" can catch that.
"""


class KrauscopeError(ValueError):
    """Base class for all errors raised by this package."""


class DimensionError(KrauscopeError):
    pass


class NotHermitianError(KrauscopeError):
    pass


class NotUnitaryError(KrauscopeError):
    pass


class NotIsometryError(KrauscopeError):
    pass


class CompletenessError(KrauscopeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InvalidStateError(KrauscopeError):
    pass


class VanishingDenominatorError(KrauscopeError):
    """A quantity the estimator divides by is (numerically) zero.

    ``factor`` names the culprit: ``"probe overlap"``, ``"env overlap"``,
    ``"rho overlap"``, ``"reference overlap"`` or ``"delta theta"``.
    ``location`` is the ``(i, j, k)`` element being reconstructed, if known.
    """

    def __init__(self, message, factor, location=None):
        if location is not None:
            message = f"{message} at (i, j, k) = {location}"
        super().__init__(message)
        self.factor = factor
        self.location = location


class ConfigError(KrauscopeError):
    """Malformed experiment configuration; ``path`` is a JSON path like ``$.seeds[2]``."""

    def __init__(self, message, path="$"):
        super().__init__(f"{path}: {message}")
        self.path = path
