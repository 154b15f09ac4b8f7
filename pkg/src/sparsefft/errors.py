"""Exception types raised by the sparse FFT toolkit."""


class SparseFFTError(Exception):
    """Base class for all toolkit errors."""


class NonInvertibleScaling(SparseFFTError):
    """Scaling parameter shares a factor with the signal length."""


class NonDivisorParameter(SparseFFTError):
    """A factor that must divide the signal length does not."""


class LengthMismatch(SparseFFTError):
    """Two sequences that must have equal length do not."""


class InvalidParameter(SparseFFTError):
    """A construction parameter is out of its valid range."""


class FilterKindMismatch(SparseFFTError):
    """An operation received a filter of the wrong kind."""


class ZeroTonBucket(SparseFFTError):
    """A location method was applied to an empty bucket."""


class AmbiguousSplit(SparseFFTError):
    """A search round could not distinguish its sub-buckets."""


class SingularMomentMatrix(SparseFFTError):
    """The moment system is numerically singular (collision count too high)."""


class RankDeficient(SparseFFTError):
    """The estimation system has fewer independent equations than unknowns."""


class NearZeroResponse(SparseFFTError):
    """The filter response at the requested offset is below the usable floor."""


class ConfigMismatch(SparseFFTError):
    """An algorithm configuration combines incompatible components."""


class InvalidSpec(SparseFFTError):
    """A signal specification is malformed."""


class SchemaError(SparseFFTError):
    """A results file does not match the expected schema."""
