"""Exception hierarchy shared by all auctionlab modules."""


class AuctionLabError(Exception):
    """Base class for all errors raised by this package."""


class InstanceShapeError(AuctionLabError):
    """An index or vector length does not match the instance's item count."""


class CapabilityError(AuctionLabError):
    """The request exceeds a configured exhaustive-computation cap and no
    specialized backend applies."""


class InvariantViolationError(AuctionLabError):
    """An internal structural invariant was violated (overlapping bundles,
    price outside every tree node, mismatched vector lengths, ...)."""


class DomainError(AuctionLabError):
    """An argument is outside the operation's domain (non-positive price
    floor, zero bidders, unknown bidder id, ...)."""


class ConfigError(AuctionLabError):
    """An experiment or generator configuration is invalid."""
