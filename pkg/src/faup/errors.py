"""Exception types shared across the toolkit.

Everything user-facing derives from FaupError so the CLI can map
data/model problems to a single exit code.
"""


class FaupError(Exception):
    """Base class for all toolkit errors."""


class DegenerateGeometryError(FaupError):
    """Face geometry unusable (coincident inner eye corners, zero scale)."""


class InvalidInputError(FaupError):
    """Operation called with arguments outside its contract."""


class UnsupportedTransitionError(FaupError):
    """No tabulated transition rule for the requested emotion pair."""


class LandmarkFileError(FaupError):
    """Malformed landmark file."""


class PgmError(FaupError):
    """Malformed PGM data; message includes the byte offset where parsing failed."""


class DatasetError(FaupError):
    """Dataset directory missing, incomplete or inconsistent."""


class ModelFileError(FaupError):
    """Model file unreadable: bad header, version, checksum or section."""
