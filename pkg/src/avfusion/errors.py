"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible or malformed shapes."""


class DomainError(ValueError):
    """A numeric argument is outside the operation's domain (e.g. temperature <= 0)."""


class DegenerateError(ValueError):
    """The input is degenerate for the requested statistic (constant data, too few samples)."""


class ConfigError(ValueError):
    """A configuration value is invalid (e.g. even median window, bad DFT length)."""


class FormatError(ValueError):
    """A file is malformed, truncated, or carries an unsupported format version."""
