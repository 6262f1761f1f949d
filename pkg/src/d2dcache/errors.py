"""Exception types shared across the package."""


class D2DCacheError(Exception):
    """Base class for all domain errors raised by this package."""


class ParameterError(D2DCacheError, ValueError):
    """An argument is malformed or out of its documented range."""


class UnsupportedParameterError(ParameterError):
    """The configuration falls outside what the schemes support
    (e.g. a cache size that does not split files evenly)."""


class TrivialCachingError(ParameterError):
    """Caches are large enough to hold the whole library, so there is
    nothing to deliver."""


class ToleranceExceededError(ParameterError):
    """More non-transmitting users were requested than the scheme can
    compensate for."""


class InfeasibleError(ParameterError):
    """No code rate in (0, 1) can satisfy the decodability condition."""


class NoTransmitterError(D2DCacheError):
    """Delivery is impossible because no user is willing to transmit."""


class InsufficientSymbolsError(D2DCacheError):
    """Fewer distinct coded symbols than source symbols were supplied,
    so erasure decoding cannot proceed."""
