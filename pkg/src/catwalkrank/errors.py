"""Exception types shared across the package.

Everything raised deliberately by this package derives from
CatwalkRankError, so callers can catch one type at the boundary.
"""


class CatwalkRankError(Exception):
    """Base class for all errors raised by catwalkrank."""


class ParseError(CatwalkRankError):
    """A file is malformed (bad header, truncated raster, junk bytes)."""


class UnsupportedFormat(CatwalkRankError):
    """A file parsed fine but uses a variant we do not handle."""


class ManifestError(CatwalkRankError):
    """Dataset metadata is inconsistent with what is on disk."""


class InsufficientFrames(CatwalkRankError):
    """A video has too few frames to compute temporal quantities."""


class ShapeError(CatwalkRankError):
    """An array argument has the wrong shape or dimensionality."""


class InvalidInput(CatwalkRankError):
    """Input data contains non-finite values or is otherwise unusable."""


class InvalidArgument(CatwalkRankError):
    """A configuration value or function argument is out of range."""


class EmptySet(CatwalkRankError):
    """An operation that needs at least one element received none."""


class FitError(CatwalkRankError):
    """Model estimation cannot proceed (too few samples, no variance)."""
