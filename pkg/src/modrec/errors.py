"""Exception types shared across the package."""


class ModrecError(Exception):
    """Base class for all package errors."""


class ConfigError(ModrecError, ValueError):
    """A configuration value failed validation."""


class ShapeError(ModrecError, ValueError):
    """Array dimensions do not match what an operation requires."""


class ClassMismatchError(ModrecError, ValueError):
    """A modulation class was passed to a generator that cannot produce it."""


class SignalError(ModrecError, ValueError):
    """A signal is degenerate for the requested operation (e.g. zero power)."""


class DatasetFormatError(ModrecError):
    """Base class for problems reading a binary container."""


class BadMagicError(DatasetFormatError):
    pass


class CorruptionError(DatasetFormatError):
    """The file is truncated or its contents disagree with its header."""


class UnsupportedVersionError(DatasetFormatError):
    pass
