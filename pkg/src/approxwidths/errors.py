"""Exception types shared across the toolkit."""


class KindMismatchError(ValueError):
    """Two elements (or an element and a scheme) live in different spaces."""


class UnsupportedSchemeError(ValueError):
    """The requested operation is not defined for this scheme kind."""


class RankDeficientBasisError(ValueError):
    """A chain basis has numerically dependent leading columns."""


class ThresholdNotReachedError(RuntimeError):
    """A profile never drops below the level an iterative construction needs."""

    def __init__(self, message, *, stage=None, index=None):
        super().__init__(message)
        self.stage = stage
        self.index = index


class ProfileNotDecayingError(RuntimeError):
    """An error profile does not decay enough to run a weight construction."""
