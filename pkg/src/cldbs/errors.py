"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """A configuration value violates a documented constraint."""


class DesignError(ValueError):
    """A filter cannot be designed for the requested band."""


class FormatError(ValueError):
    """A run file or manifest does not match its schema."""


class GenerationError(RuntimeError):
    """Dataset generation was asked to do something inconsistent."""
