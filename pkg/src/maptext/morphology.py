"""Binary morphology: Prewitt edges, dilation, component labeling, area filter.

Edge detection responds to any nonzero gradient of the 0/1 mask (replicate
borders, so constant masks produce no edges). Dilation grows foreground by a
structuring element. Labeling assigns dense component ids in raster-scan
order of each component's first pixel, which keeps results deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ImageTooSmallError, ThresholdOutOfRangeError
from .raster import BinaryMask, GrayImage, apply_threshold, otsu_threshold

__all__ = [
    "StructuringElement",
    "LabelMatrix",
    "ComponentStats",
    "prewitt_edges",
    "prewitt_magnitude",
    "prewitt_edges_gray",
    "dilate",
    "label_components",
    "filter_components",
]

PREWITT_GX = np.array([[-1, 0, 1], [-1, 0, 1], [-1, 0, 1]], dtype=np.int64)
PREWITT_GY = np.array([[-1, -1, -1], [0, 0, 0], [1, 1, 1]], dtype=np.int64)


@dataclass(frozen=True)
class StructuringElement:
    """Odd-sized neighborhood; hits are (dy, dx) offsets from the center."""

    width: int
    height: int
    hits: frozenset

    def __post_init__(self):
        if self.width % 2 == 0 or self.height % 2 == 0 or self.width < 1 or self.height < 1:
            raise ValueError("structuring element dimensions must be odd and positive")
        hits = frozenset((int(dy), int(dx)) for dy, dx in self.hits)
        if (0, 0) not in hits:
            raise ValueError("structuring element must contain the center offset (0, 0)")
        ry, rx = self.height // 2, self.width // 2
        for dy, dx in hits:
            if abs(dy) > ry or abs(dx) > rx:
                raise ValueError(f"hit offset ({dy}, {dx}) outside {self.height}x{self.width} element")
        object.__setattr__(self, "hits", hits)

    @classmethod
    def square(cls, size: int = 3) -> "StructuringElement":
        r = size // 2
        hits = frozenset((dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1))
        return cls(width=size, height=size, hits=hits)

    @classmethod
    def cross(cls, size: int = 3) -> "StructuringElement":
        r = size // 2
        hits = frozenset({(0, 0)} | {(d, 0) for d in range(-r, r + 1)} | {(0, d) for d in range(-r, r + 1)})
        return cls(width=size, height=size, hits=hits)


@dataclass(frozen=True, eq=False)
class LabelMatrix:
    """Component ids per pixel; 0 = background, 1..C dense component ids."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ValueError(f"label matrix must be 2-D, got shape {arr.shape}")
        if arr.dtype != np.int32:
            arr = arr.astype(np.int32)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def count(self) -> int:
        return int(self.labels.max(initial=0))

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelMatrix) and np.array_equal(self.labels, other.labels)


@dataclass(frozen=True)
class ComponentStats:
    """Area and inclusive bounding box (min_x, min_y, max_x, max_y) of one component."""

    id: int
    area: int
    bbox: tuple

    def __post_init__(self):
        if self.area < 1:
            raise ValueError("component area must be >= 1")


def prewitt_edges(mask: BinaryMask) -> BinaryMask:
    """Edge pixels of a binary mask: any nonzero Prewitt gradient magnitude.

    The mask is replicate-padded, so an all-constant mask yields no edges.
    """
    if mask.width < 3 or mask.height < 3:
        raise ImageTooSmallError(
            f"edge detection needs at least 3x3, got {mask.height}x{mask.width}"
        )
    a = mask.pixels.astype(np.int64)
    gx = ndimage.correlate(a, PREWITT_GX, mode="nearest")
    gy = ndimage.correlate(a, PREWITT_GY, mode="nearest")
    return BinaryMask((gx != 0) | (gy != 0))


def prewitt_magnitude(img: GrayImage) -> np.ndarray:
    """Prewitt gradient magnitude of a grayscale image (float array)."""
    a = img.pixels.astype(np.int64)
    gx = ndimage.correlate(a, PREWITT_GX, mode="nearest")
    gy = ndimage.correlate(a, PREWITT_GY, mode="nearest")
    return np.sqrt(gx.astype(np.float64) ** 2 + gy.astype(np.float64) ** 2)


def prewitt_edges_gray(img: GrayImage) -> BinaryMask:
    """Debug helper: binarize the grayscale gradient magnitude with Otsu."""
    mag = prewitt_magnitude(img)
    scaled = GrayImage(np.clip(np.floor(mag / mag.max() * 255 + 0.5) if mag.max() > 0 else mag, 0, 255).astype(np.uint8))
    return apply_threshold(scaled, otsu_threshold(scaled), "above")


def _shift(mask: np.ndarray, dy: int, dx: int) -> np.ndarray:
    h, w = mask.shape
    out = np.zeros_like(mask)
    if abs(dy) >= h or abs(dx) >= w:
        return out
    src_y = slice(max(0, -dy), h - max(0, dy))
    dst_y = slice(max(0, dy), h - max(0, -dy))
    src_x = slice(max(0, -dx), w - max(0, dx))
    dst_x = slice(max(0, dx), w - max(0, -dx))
    out[dst_y, dst_x] = mask[src_y, src_x]
    return out


def dilate(mask: BinaryMask, se: StructuringElement | None = None, iterations: int = 1) -> BinaryMask:
    """Binary dilation: union of the mask translated by every hit offset.

    Repeating `iterations` times grows the foreground further. Output always
    contains the input because the center offset is a mandatory hit.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if se is None:
        se = StructuringElement.square(3)
    current = mask.pixels
    for _ in range(iterations):
        acc = np.zeros_like(current)
        for dy, dx in se.hits:
            acc |= _shift(current, dy, dx)
        current = acc
    return BinaryMask(current)


_STRUCT_4 = ndimage.generate_binary_structure(2, 1)
_STRUCT_8 = ndimage.generate_binary_structure(2, 2)


def label_components(mask: BinaryMask, connectivity: int = 8):
    """Label maximal connected foreground regions.

    Returns (LabelMatrix, list[ComponentStats]). Ids are dense (1..C) and
    assigned in raster-scan order of each component's first pixel.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = _STRUCT_4 if connectivity == 4 else _STRUCT_8
    raw, n = ndimage.label(mask.pixels, structure=structure)
    if n == 0:
        return LabelMatrix(np.zeros_like(raw, dtype=np.int32)), []

    # Renumber so ids follow the raster-scan order of first occurrence.
    flat = raw.reshape(-1)
    uniq, first = np.unique(flat, return_index=True)
    fg = uniq != 0
    order = np.argsort(first[fg], kind="stable")
    mapping = np.zeros(n + 1, dtype=np.int32)
    mapping[uniq[fg][order]] = np.arange(1, n + 1, dtype=np.int32)
    labels = mapping[raw]

    areas = np.bincount(labels.reshape(-1), minlength=n + 1)
    boxes = ndimage.find_objects(labels)
    stats = []
    for i, sl in enumerate(boxes, start=1):
        ys, xs = sl
        stats.append(
            ComponentStats(
                id=i,
                area=int(areas[i]),
                bbox=(int(xs.start), int(ys.start), int(xs.stop - 1), int(ys.stop - 1)),
            )
        )
    return LabelMatrix(labels), stats


def filter_components(labels: LabelMatrix, stats, t: int) -> BinaryMask:
    """Keep exactly the components with area >= t.

    The threshold must satisfy 0 < t < width*height.
    """
    if not 0 < t < labels.width * labels.height:
        raise ThresholdOutOfRangeError(
            f"threshold must satisfy 0 < T < {labels.width * labels.height} "
            f"(width*height), got {t}"
        )
    n = labels.count
    keep = np.zeros(n + 1, dtype=bool)
    for s in stats:
        if s.area >= t:
            keep[s.id] = True
    return BinaryMask(keep[labels.labels])
