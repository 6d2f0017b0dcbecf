"""Error types shared across the package.

Everything user-facing derives from DataError so the CLI can map it to
exit code 1; programming errors propagate as-is.
"""


class DataError(Exception):
    """Invalid input data (bad manifest, bad predictions, bad raster...)."""


class ManifestError(DataError):
    """Manifest file cannot be parsed or fails validation."""


class DecodeError(DataError):
    """Image file missing, unreadable, or not PNG/JPEG."""
