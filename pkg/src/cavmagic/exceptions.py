"""Exception types raised by cavmagic."""


class CavmagicError(Exception):
    """Base class for all package errors."""


class AngularMomentumError(CavmagicError, ValueError):
    """Malformed angular momentum (non half-integral, parity mismatch)."""


class LevelSchemeError(CavmagicError, ValueError):
    """Invalid level-scheme document or configuration."""


class DistributionError(CavmagicError, ValueError):
    """Zeeman distribution that is negative, unnormalized or mislabeled."""


class NoRootError(CavmagicError):
    """The polarizability has no sign change in the requested bracket."""


class DataFormatError(CavmagicError, ValueError):
    """Malformed CSV or JSON input."""


class FitError(CavmagicError, ValueError):
    """Fit inputs that cannot be fitted (empty overlap, too few points)."""
