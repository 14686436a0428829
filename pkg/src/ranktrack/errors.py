"""Exception types shared across the tracker."""


class TrackingError(Exception):
    """Base class for all errors raised by this package."""


class OutOfBounds(TrackingError):
    """A continuous sample point or template support left the valid image rectangle."""


class TooSmall(TrackingError):
    """An image is too small to build the requested pyramid."""


class InsufficientHistory(TrackingError):
    """No feature has any past positions yet; the trajectory matrix is undefined."""


class TooFewFeatures(TrackingError):
    """Fewer than two features are eligible for the trajectory matrix."""


class RankParamTooLarge(TrackingError):
    """The factorization rank d is not smaller than the matrix's minimum dimension."""


class UnknownId(TrackingError):
    """No feature with the given id exists in the session."""


class MissingGroundTruth(TrackingError):
    """A (feature, frame) pair required by an evaluation has no ground-truth entry."""


class ConfigError(TrackingError):
    """A configuration file or option is malformed or unknown."""
