"""Exception types raised across the FAZ pipeline."""


class FazError(Exception):
    """Base class for every error raised by fazseg."""


class ImageNotFound(FazError, FileNotFoundError):
    pass


class UnsupportedFormat(FazError):
    pass


class CorruptImage(FazError):
    pass


class DimensionMismatch(FazError, ValueError):
    pass


class DegenerateImage(FazError):
    """The input carries no usable signal (e.g. an all-black capture)."""


class ImageTooSmall(FazError, ValueError):
    pass


class NoCandidates(FazError):
    pass


class AllCandidatesRejected(FazError):
    pass


class LocalizationFailed(FazError):
    """The pipeline could not localize a FAZ; wraps the stage-level cause."""

    def __init__(self, reason, cause=None):
        super().__init__(reason)
        self.reason = reason
        self.cause = cause


class EmptySeed(FazError, ValueError):
    pass


class ConstantSeries(FazError, ValueError):
    pass


class LengthMismatch(FazError, ValueError):
    pass


class ManifestError(FazError):
    pass


class ConfigError(FazError, ValueError):
    pass


class InvalidSpec(FazError, ValueError):
    pass
