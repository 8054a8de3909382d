"""Exception types shared across the package."""


class CtuniformError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(CtuniformError):
    """Array shapes are inconsistent with what an operation requires."""


class EmptyInputError(CtuniformError):
    """An operation that needs at least one element received none."""


class DomainError(CtuniformError):
    """A numeric argument lies outside the supported domain."""


class ConfigError(CtuniformError):
    """A configuration object is internally inconsistent."""


class FormatError(CtuniformError):
    """A file does not conform to the expected on-disk format."""


class UnsupportedDatatype(FormatError):
    """A file declares a voxel datatype outside the supported set."""


class UnsupportedRank(FormatError):
    """A file declares a dimensionality other than 3."""


class TruncationError(FormatError):
    """A file ends before its declared payload does."""


class IoError(CtuniformError):
    """A read or write failed at the OS level."""


class PhaseError(CtuniformError):
    """Preprocessing steps were applied out of order."""


class DegenerateBatchError(CtuniformError):
    """Batch statistics were requested over fewer than two values."""


class DegenerateLabelsError(CtuniformError):
    """A metric that needs both classes saw only one."""


class GenerationError(CtuniformError):
    """Synthetic volume generation could not satisfy its constraints."""
