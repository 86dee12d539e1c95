"""Exception hierarchy shared across the toolkit."""


class BratskitError(Exception):
    """Base class for all toolkit errors."""


class FormatError(BratskitError):
    """Malformed file content. Carries the byte offset of the offending field."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedDatatypeError(BratskitError):
    """File uses a datatype code outside the supported subset."""


class CompressedInputError(BratskitError):
    """Gzip-compressed input; only uncompressed files are supported."""


class IncompatibleGeometryError(BratskitError):
    """Volumes do not share dims/spacing."""


class DegenerateInputError(BratskitError):
    """Input is empty or constant where variation is required."""


class ValidationError(BratskitError):
    """Value-level invariant violated (NaN payload, bad label, incomplete table...)."""


class PlacementError(BratskitError):
    """No valid placement found within the attempt budget."""
