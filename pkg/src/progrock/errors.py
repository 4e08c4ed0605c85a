"""Exception hierarchy shared across the package."""


class ProgrockError(Exception):
    """Base class for all package errors."""


class AudioFormatError(ProgrockError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedAudioError(ProgrockError):
    """The WAVE file uses an encoding or layout we do not decode."""


class CacheFormatError(ProgrockError):
    """Feature cache has the wrong magic bytes or version."""


class CacheCorruptError(ProgrockError):
    """Feature cache is truncated or otherwise inconsistent."""


class ArtifactFormatError(ProgrockError):
    """Model artifact has the wrong magic bytes, version or layout."""


class ConfigurationError(ProgrockError):
    """Parameters are inconsistent (bad geometry, shape drift, ...)."""


class DatasetError(ProgrockError):
    """The dataset cannot support the requested operation."""
