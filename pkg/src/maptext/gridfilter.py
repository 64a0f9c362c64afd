"""Grid-structure scrutiny: remove straight-line blocks from a mask.

The mask is partitioned into disjoint B x B blocks anchored at (0, 0). A
block whose entire row, column, main diagonal or anti-diagonal is foreground
is presumed to carry line graphics (roads, borders) rather than text, and all
of its pixels are cleared. Partial edge blocks are zero-padded for the test
only, so a truncated line at the image edge never reads as total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadBlockSizeError
from .raster import BinaryMask

__all__ = ["GridSpec", "block_is_line", "grid_filter"]

ALLOWED_BLOCK_SIZES = (3, 5)


@dataclass(frozen=True)
class GridSpec:
    """Which block sizes to apply, in order. Empty passes = no-op.

    `sliding` switches from disjoint tiling to evaluating every window
    position (experimental; disjoint tiling is the documented behavior).
    """

    block: int = 3
    passes: tuple = None  # defaults to (block,)
    sliding: bool = False

    def __post_init__(self):
        if self.block not in ALLOWED_BLOCK_SIZES:
            raise BadBlockSizeError(f"block size must be one of {ALLOWED_BLOCK_SIZES}, got {self.block}")
        passes = (self.block,) if self.passes is None else tuple(int(b) for b in self.passes)
        for b in passes:
            if b not in ALLOWED_BLOCK_SIZES:
                raise BadBlockSizeError(f"pass size must be one of {ALLOWED_BLOCK_SIZES}, got {b}")
        object.__setattr__(self, "passes", passes)

    @classmethod
    def none(cls) -> "GridSpec":
        """A spec that filters nothing (used for rounds without gridding)."""
        return cls(passes=())


def block_is_line(block) -> bool:
    """True iff any full row, full column, or either full diagonal is set."""
    b = np.asarray(block, dtype=bool)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] not in ALLOWED_BLOCK_SIZES:
        raise BadBlockSizeError(f"block must be 3x3 or 5x5, got shape {b.shape}")
    n = b.shape[0]
    idx = np.arange(n)
    return bool(
        b.all(axis=1).any()
        or b.all(axis=0).any()
        or b[idx, idx].all()
        or b[idx, n - 1 - idx].all()
    )


def _line_blocks(blocks: np.ndarray) -> np.ndarray:
    """Vectorized block_is_line over a (..., B, B) stack."""
    n = blocks.shape[-1]
    idx = np.arange(n)
    rows = blocks.all(axis=-1).any(axis=-1)
    cols = blocks.all(axis=-2).any(axis=-1)
    diag = blocks[..., idx, idx].all(axis=-1)
    anti = blocks[..., idx, n - 1 - idx].all(axis=-1)
    return rows | cols | diag | anti


def _filter_pass_tiled(mask: np.ndarray, b: int) -> np.ndarray:
    h, w = mask.shape
    ph = (b - h % b) % b
    pw = (b - w % b) % b
    padded = np.pad(mask, ((0, ph), (0, pw)), mode="constant", constant_values=False)
    nby, nbx = padded.shape[0] // b, padded.shape[1] // b
    blocks = padded.reshape(nby, b, nbx, b).transpose(0, 2, 1, 3)
    line = _line_blocks(blocks)
    keep = ~np.repeat(np.repeat(line, b, axis=0), b, axis=1)
    return (padded & keep)[:h, :w]


def _filter_pass_sliding(mask: np.ndarray, b: int) -> np.ndarray:
    h, w = mask.shape
    if h < b or w < b:
        return mask.copy()
    windows = np.lib.stride_tricks.sliding_window_view(mask, (b, b))
    line = _line_blocks(windows)
    clear = np.zeros_like(mask)
    ys, xs = np.nonzero(line)
    for y, x in zip(ys, xs):
        clear[y : y + b, x : x + b] = True
    return mask & ~clear


def grid_filter(mask: BinaryMask, spec: GridSpec) -> BinaryMask:
    """Clear every line-like block for each pass size, in sequence."""
    current = mask.pixels
    for b in spec.passes:
        if spec.sliding:
            current = _filter_pass_sliding(current, b)
        else:
            current = _filter_pass_tiled(current, b)
    return BinaryMask(current) if current is not mask.pixels else mask
