"""Exception hierarchy shared across the pipeline."""


class GmsError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GmsError):
    """Invalid configuration value or config file."""


class DataError(GmsError):
    """Bad input data: manifest, video files, labels, cache payloads."""


class PipelineError(GmsError):
    """Runtime failure inside a processing stage (backend failure, bad state)."""
