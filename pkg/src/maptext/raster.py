"""Core raster types and pixel-level primitives.

Images are thin immutable wrappers around numpy arrays in row-major
(height, width) layout. Grayscale conversion, median denoising, Otsu
thresholding and binarization live here; everything is a pure function.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    DegenerateHistogramWarning,
    EvenWindowError,
    WindowTooLargeError,
)

__all__ = [
    "RgbImage",
    "GrayImage",
    "BinaryMask",
    "to_grayscale",
    "median_denoise",
    "otsu_threshold",
    "apply_threshold",
]

# BT.601 luma weights; round-half-up keeps the conversion bit-reproducible.
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class RgbImage:
    """8-bit RGB raster, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"RgbImage needs shape (h, w, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image dimensions must be positive")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("channel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "pixels", _freeze(arr))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> np.ndarray:
        """Row-major flat view of (r, g, b) triples."""
        return self.pixels.reshape(-1, 3)

    def __eq__(self, other) -> bool:
        return isinstance(other, RgbImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValueError(f"GrayImage needs shape (h, w), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image dimensions must be positive")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "pixels", _freeze(arr))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> np.ndarray:
        return self.pixels.reshape(-1)

    def __eq__(self, other) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean raster, shape (height, width); True = foreground."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValueError(f"BinaryMask needs shape (h, w), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("mask dimensions must be positive")
        if arr.dtype != bool:
            arr = arr.astype(bool)
        object.__setattr__(self, "pixels", _freeze(arr))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> np.ndarray:
        return self.pixels.reshape(-1)

    def foreground_count(self) -> int:
        return int(self.pixels.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryMask) and np.array_equal(self.pixels, other.pixels)


def to_grayscale(img: RgbImage) -> GrayImage:
    """Convert RGB to gray with BT.601 weights, round-half-up, clamped."""
    luma = img.pixels.astype(np.float64) @ _LUMA_WEIGHTS
    out = np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)
    return GrayImage(out)


def median_denoise(img: GrayImage, window: int = 3) -> GrayImage:
    """Median-filter with a window x window neighborhood, replicate borders.

    The window must be an odd integer >= 3 and no larger than the image's
    smaller dimension. Dimensions are preserved.
    """
    if window % 2 == 0:
        raise EvenWindowError(f"median window must be odd, got {window}")
    if window < 3:
        raise ValueError(f"median window must be >= 3, got {window}")
    if window > min(img.width, img.height):
        raise WindowTooLargeError(
            f"window {window} exceeds min(width, height) = {min(img.width, img.height)}"
        )
    out = ndimage.median_filter(img.pixels, size=window, mode="nearest")
    return GrayImage(out)


def otsu_threshold(img: GrayImage) -> int:
    """Intensity t maximizing between-class variance of {v <= t} vs {v > t}.

    Ties break toward the smallest t. A constant image has no separating
    threshold: the constant value is returned and a DegenerateHistogramWarning
    is emitted.
    """
    hist = np.bincount(img.pixels.reshape(-1), minlength=256).astype(np.float64)
    n = hist.sum()
    w0 = np.cumsum(hist)
    s0 = np.cumsum(hist * np.arange(256))
    total = s0[-1]
    w1 = n - w0
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        value = int(np.flatnonzero(hist)[0])
        warnings.warn(
            f"constant image (value {value}); returning it unchanged",
            DegenerateHistogramWarning,
            stacklevel=2,
        )
        return value
    var = np.full(256, -np.inf)
    mu0 = s0[valid] / w0[valid]
    mu1 = (total - s0[valid]) / w1[valid]
    var[valid] = (w0[valid] / n) * (w1[valid] / n) * (mu0 - mu1) ** 2
    return int(np.argmax(var))


def apply_threshold(img: GrayImage, t: int, polarity: str = "above") -> BinaryMask:
    """Binarize: 'above' sets pixels with value > t, 'below' those with value <= t."""
    if polarity == "above":
        return BinaryMask(img.pixels > t)
    if polarity == "below":
        return BinaryMask(img.pixels <= t)
    raise ValueError(f"polarity must be 'above' or 'below', got {polarity!r}")
