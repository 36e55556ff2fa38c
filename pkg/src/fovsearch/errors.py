"""Exception types shared across the package."""


class FovSearchError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FovSearchError):
    """A configuration or input record violates its invariants."""


class OutOfBoundsError(FovSearchError):
    """A focal point or cell index lies outside the valid domain."""


class SearchExhaustedError(FovSearchError):
    """Every grid cell is inhibited; no fixation can be selected."""


class BridgeProtocolError(FovSearchError):
    """A detector-bridge document failed strict validation."""


class BridgeTimeoutError(FovSearchError):
    """The detector bridge did not answer within the deadline."""
