"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid parameter, configuration value, or parameter combination."""


class ShapeError(ValueError):
    """Inputs have incompatible lengths or shapes."""


class DomainError(ValueError):
    """Argument lies outside the mathematical domain of an operation."""


class FormatError(ValueError):
    """Malformed recording file. ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset
