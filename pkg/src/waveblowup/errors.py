"""Shared exception types."""


class ConfigurationError(ValueError):
    """A configured parameter set is invalid or breaks a construction."""


class QuadratureError(RuntimeError):
    """A quadrature failed to reach its requested tolerance."""


class OrderOverflowError(RuntimeError):
    """A requested derivative order exceeds what a profile can deliver."""


class InversionError(RuntimeError):
    """Damped Newton inversion failed to converge."""
