"""Exception hierarchy shared by the library and the CLI.

Everything user-correctable derives from :class:`InputError`; the CLI maps
those to exit code 2 and anything else to exit code 1.
"""

from __future__ import annotations


class SomkitError(Exception):
    """Base class for all errors raised by this package."""


class InputError(SomkitError):
    """Bad user input: malformed data, out-of-range parameters, bad config."""


class ShapeError(InputError):
    """Array or vector dimensions do not line up."""


class BoundsError(InputError):
    """A coordinate or index lies outside the grid or data."""


class ParameterError(InputError):
    """A scalar parameter violates its documented range."""


class DomainError(InputError):
    """An input is outside the mathematical domain of an operation."""


class ParseError(InputError):
    """A file could not be parsed.

    ``offset`` carries the byte offset (binary files) or is ``None`` for
    text formats where the message already cites row/column.
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class VersionError(InputError):
    """A file's format version is not supported."""

    def __init__(self, found: int, expected: int):
        super().__init__(
            f"unsupported model file version {found}, expected {expected}"
        )
        self.found = found
        self.expected = expected


class ConfigError(InputError):
    """A config file contains unknown keys or unparseable values."""
