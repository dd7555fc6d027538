"""Exception hierarchy shared by every module."""


class LdtsError(Exception):
    pass


class ConfigError(LdtsError, ValueError):
    """Invalid configuration values."""


class ArgumentError(LdtsError, ValueError):
    """A call argument is out of its allowed range."""


class ShapeError(LdtsError, ValueError):
    """Array dimensions do not line up."""


class NumericError(LdtsError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class DatasetError(LdtsError, OSError):
    """A dataset directory is missing files or is internally inconsistent.

    ``path`` names the offending file when one can be singled out.
    """

    def __init__(self, message, path=None):
        self.path = None if path is None else str(path)
        if self.path is not None and self.path not in message:
            message = f"{message} ({self.path})"
        super().__init__(message)
