"""Exception and warning types shared across the package.

Every domain error derives from MapTextError so callers can catch one base
type. The pipeline annotates errors it propagates with the stage name
(``err.stage``) so a failure can be attributed to i_gray, i_mask, etc.
"""

from __future__ import annotations


class MapTextError(Exception):
    """Base class for all domain errors raised by this package."""

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        base = super().__str__()
        if self.stage:
            return f"[stage {self.stage}] {base}"
        return base


# raster ---------------------------------------------------------------

class EvenWindowError(MapTextError):
    """Median window must be an odd integer."""


class WindowTooLargeError(MapTextError):
    """Median window exceeds the image's smaller dimension."""


class DegenerateHistogramWarning(UserWarning):
    """All pixels share one intensity; no threshold separates anything."""


# fcm ------------------------------------------------------------------

class TooFewDistinctValuesError(MapTextError):
    """Fewer distinct input values than requested cluster centers."""


class EmptyClusterError(MapTextError):
    """A cluster received zero total membership mass."""


class EmptyClusterWarning(UserWarning):
    """A cluster lost all membership mass; its previous center was kept."""


class IndexOutOfRangeError(MapTextError):
    """Cluster selection index is outside 0..K-1."""


# morphology -----------------------------------------------------------

class ImageTooSmallError(MapTextError):
    """Operation needs a larger image (e.g. edge detection below 3x3)."""


class ThresholdOutOfRangeError(MapTextError):
    """Component area threshold violates 0 < T < width*height."""


# gridfilter -----------------------------------------------------------

class BadBlockSizeError(MapTextError):
    """Grid block side length must be 3 or 5."""


# pipeline -------------------------------------------------------------

class DimensionMismatchError(MapTextError):
    """Two rasters that must share dimensions do not."""


class StaleStageSetError(MapTextError):
    """Cached stages do not belong to the image/config being rerun."""


# evaluation -----------------------------------------------------------

class EmptyMatrixError(MapTextError):
    """Confusion matrix has zero total count."""


class GroundTruthSchemaError(MapTextError):
    """Ground-truth document violates the expected schema."""

    def __init__(self, message: str, *, region_index: int | None = None):
        super().__init__(message)
        self.region_index = region_index


# ingest ---------------------------------------------------------------

class UnsupportedFormatError(MapTextError):
    """Image format is not one of PNG, JPEG, PGM/PPM."""


class CorruptFileError(MapTextError):
    """File exists but cannot be decoded."""


class IoError(MapTextError):
    """Filesystem read/write failure."""


class NetworkError(MapTextError):
    """HTTP request failed below the status-code level (DNS, timeout...)."""


class HttpStatusError(MapTextError):
    """HTTP request completed with a non-success status code."""

    def __init__(self, status: int, url: str):
        super().__init__(f"HTTP {status} for {url}")
        self.status = status
        self.url = url
