"""Exception hierarchy shared by all tempokit modules."""


class TempoKitError(Exception):
    """Base class for all errors raised by tempokit."""


class DataError(TempoKitError, ValueError):
    """Input data violates a precondition (maps to CLI exit code 3)."""


class ConfigError(TempoKitError, ValueError):
    """A configuration value is out of range."""


class FileFormatError(TempoKitError, IOError):
    """A file exists but cannot be decoded (maps to CLI exit code 2)."""


# audio front-end
class UnsupportedEncoding(FileFormatError):
    pass


class MalformedHeader(FileFormatError):
    pass


class UnsupportedSampleRate(DataError):
    pass


class ClipTooShort(DataError):
    pass


class InvalidConfig(ConfigError):
    pass


# model
class ShapeMismatch(DataError):
    pass


class StateShapeMismatch(ShapeMismatch):
    pass


class BeatOutOfRange(DataError):
    pass


class TempoOutOfRange(DataError):
    pass


class EmptyDataset(DataError):
    pass


class DivergedLoss(TempoKitError, ArithmeticError):
    pass


class ChecksumMismatch(FileFormatError):
    pass


class VersionUnsupported(FileFormatError):
    pass


class TruncatedFile(FileFormatError):
    pass


# decoders
class InsufficientLength(DataError):
    pass


class FlatActivation(DataError):
    pass


class RangeUncovered(DataError):
    pass


class TooFewBeats(DataError):
    pass


# evaluation
class NonPositiveTempo(DataError):
    pass


class ManifestTooSmall(DataError):
    pass


class MissingFile(TempoKitError, FileNotFoundError):
    pass


class UnknownMethod(TempoKitError, ValueError):
    pass


class InvalidSpec(ConfigError):
    pass
