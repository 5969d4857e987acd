"""Exceptions raised by :mod:`luslines`.

Every exception carries a short `category` string.  The command-line
interface reports failures as a single ``error: <category>: <message>``
line, so scripts can dispatch on the category without parsing prose.
"""

__docformat__ = 'restructuredtext'

__all__ = ["LuslinesError", "ParameterError", "ConfigError", "FormatError",
           "UnsupportedVersionError", "DimensionError", "DivergenceError",
           "DegenerateRootError", "PleuralNotFoundError", "MissingFileError",
           "StorageError"]


class LuslinesError(Exception):
    """Base class of all errors raised deliberately by :mod:`luslines`."""
    category = "error"


class ParameterError(LuslinesError, ValueError):
    """A numerical argument lies outside its documented range."""
    category = "parameter"


class ConfigError(ParameterError):
    """A configuration field is missing, unknown, or out of range.

    Parameters
    ----------
    field : str
        Name of the offending field.
    message : str
        What is wrong with it.

    Examples
    --------
    >>> err = ConfigError("epochs", "must be >= 1, got 0")
    >>> print(err)
    epochs: must be >= 1, got 0
    >>> err.field
    'epochs'
    """
    category = "config"

    def __init__(self, field, message):
        super(ConfigError, self).__init__("{}: {}".format(field, message))
        self.field = field
        self.message = message


class FormatError(LuslinesError, ValueError):
    """A file is unreadable, truncated, or not in the expected format."""
    category = "format"


class UnsupportedVersionError(FormatError):
    """A model file was written by a newer (or unknown) format version."""
    category = "version"


class DimensionError(LuslinesError, ValueError):
    """Array shapes, image sizes, or geometries do not agree."""
    category = "dimension"


class DivergenceError(LuslinesError, FloatingPointError):
    """An iterate, layer output, or loss became non-finite."""
    category = "divergence"


class DegenerateRootError(LuslinesError, ArithmeticError):
    """The implicit derivative of the proximal root is undefined."""
    category = "degenerate-root"


class PleuralNotFoundError(LuslinesError, LookupError):
    """No Radon-domain peak was found in the pleural search band."""
    category = "pleural-not-found"


class MissingFileError(LuslinesError, FileNotFoundError):
    """Files expected to come in pairs are missing their counterparts."""
    category = "missing"


class StorageError(LuslinesError, OSError):
    """Writing an output file failed."""
    category = "io"
