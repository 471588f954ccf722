"""Exception types shared across the simulator."""


class FlexMarketError(Exception):
    """Base class for all simulator errors."""


class ParseError(FlexMarketError):
    """Scenario file could not be parsed."""


class ValidationError(FlexMarketError):
    """Scenario contents are invalid; ``key`` names the offending field."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class InsufficientSupply(FlexMarketError):
    """Total offered power in an hour is below the demand to clear."""


class TooLarge(FlexMarketError):
    """Brute-force selection space exceeds the configured cap."""


class UpBalancingExhausted(FlexMarketError):
    """Even the buffer plant cannot cover an up-regulation shortage."""


class LedgerImbalance(FlexMarketError):
    """Daily settlement ledger failed the zero-sum check."""


class DegenerateGroup(FlexMarketError):
    """A user group needed for a comparison is empty."""


class IoError(FlexMarketError):
    """Result files could not be written."""
