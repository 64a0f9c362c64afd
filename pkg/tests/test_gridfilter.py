import itertools

import numpy as np
import pytest

import oracles
from maptext.errors import BadBlockSizeError
from maptext.gridfilter import GridSpec, block_is_line, grid_filter
from maptext.raster import BinaryMask

# frozen at build time from the enumeration oracle over all 512 3x3 blocks
LINE_BLOCK_COUNT_3X3 = 282


class TestGridSpec:
    def test_default_single_pass(self):
        assert GridSpec().passes == (3,)

    def test_block_seeds_passes(self):
        assert GridSpec(block=5).passes == (5,)

    def test_two_pass(self):
        assert GridSpec(passes=(3, 5)).passes == (3, 5)

    def test_empty_passes_allowed(self):
        assert GridSpec(passes=()).passes == ()

    def test_bad_sizes_rejected(self):
        with pytest.raises(BadBlockSizeError):
            GridSpec(block=4)
        with pytest.raises(BadBlockSizeError):
            GridSpec(passes=(3, 7))


class TestBlockIsLine:
    def test_all_ones(self):
        assert block_is_line(np.ones((3, 3), bool))

    def test_middle_row(self):
        assert block_is_line([[0, 0, 0], [1, 1, 1], [0, 0, 0]])

    def test_broken_diagonal(self):
        assert not block_is_line([[1, 0, 0], [0, 1, 0], [0, 0, 0]])

    def test_full_main_diagonal(self):
        assert block_is_line(np.eye(3, dtype=bool))

    def test_full_anti_diagonal(self):
        assert block_is_line(np.fliplr(np.eye(5, dtype=bool)))

    def test_bad_size(self):
        with pytest.raises(BadBlockSizeError):
            block_is_line(np.ones((4, 4), bool))

    def test_exhaustive_3x3_against_enumeration(self):
        true_count = 0
        for bits in itertools.product((0, 1), repeat=9):
            block = [list(bits[0:3]), list(bits[3:6]), list(bits[6:9])]
            want = oracles.line_block_enumeration(block)
            assert block_is_line(block) == want
            true_count += want
        assert true_count == LINE_BLOCK_COUNT_3X3

    def test_random_5x5_against_enumeration(self, rng):
        for _ in range(2000):
            block = rng.random((5, 5)) < rng.uniform(0.3, 0.9)
            assert block_is_line(block) == oracles.line_block_enumeration(block.tolist())


class TestGridFilter:
    def test_full_width_line_removed(self):
        a = np.zeros((9, 12), bool)
        a[4, :] = True  # block-interior row
        out = grid_filter(BinaryMask(a), GridSpec())
        assert out.foreground_count() == 0

    def test_empty_mask(self):
        out = grid_filter(BinaryMask(np.zeros((6, 6), bool)), GridSpec())
        assert out.foreground_count() == 0

    def test_mixed_blocks(self):
        # left block solid (line), right block a sparse non-line glyph
        a = np.zeros((6, 6), bool)
        a[0:3, 0:3] = True
        glyph = np.array([[1, 0, 1], [0, 0, 0], [1, 0, 1]], bool)
        a[0:3, 3:6] = glyph
        out = grid_filter(BinaryMask(a), GridSpec())
        assert not out.pixels[0:3, 0:3].any()
        assert np.array_equal(out.pixels[0:3, 3:6], glyph)

    def test_output_subset_of_input(self, rng):
        for _ in range(100):
            a = rng.random((14, 17)) < rng.uniform(0.3, 0.9)
            out = grid_filter(BinaryMask(a), GridSpec())
            assert (out.pixels <= a).all()

    def test_idempotent_single_pass(self, rng):
        for passes in ((3,), (5,)):
            for _ in range(50):
                a = rng.random((16, 16)) < 0.7
                once = grid_filter(BinaryMask(a), GridSpec(passes=passes))
                twice = grid_filter(once, GridSpec(passes=passes))
                assert once == twice

    def test_translation_by_block_size(self, rng):
        b = 3
        a = rng.random((12, 12)) < 0.6
        shifted = np.zeros((12 + b, 12 + b), bool)
        shifted[b:, b:] = a
        out_a = grid_filter(BinaryMask(a), GridSpec()).pixels
        out_shifted = grid_filter(BinaryMask(shifted), GridSpec()).pixels
        assert np.array_equal(out_shifted[b:, b:], out_a)

    def test_partial_edge_blocks_protected(self):
        # a 4x4 mask with its last row/column in padded blocks: a full real
        # row inside a partial block still cannot span the padded triple
        a = np.zeros((4, 4), bool)
        a[3, 0:3] = True  # full real row of the bottom-edge partial block? no:
        # rows 3 alone + zero padding -> row is (1,1,1) at block row 0, so it
        # IS total: the rule fires on real full lines even in partial blocks.
        out = grid_filter(BinaryMask(a), GridSpec())
        assert out.foreground_count() == 0
        # but a truncated diagonal in a padded block never reads as total
        b = np.zeros((4, 4), bool)
        b[3, 3] = True
        out = grid_filter(BinaryMask(b), GridSpec())
        assert out.pixels[3, 3]

    def test_matches_blockwise_oracle(self, rng):
        for _ in range(30):
            h, w = (int(x) for x in rng.integers(6, 20, size=2))
            a = rng.random((h, w)) < rng.uniform(0.4, 0.9)
            out = grid_filter(BinaryMask(a), GridSpec()).pixels
            expect = a.copy()
            for by in range(0, h, 3):
                for bx in range(0, w, 3):
                    block = [
                        [bool(a[by + r, bx + c]) if by + r < h and bx + c < w else False for c in range(3)]
                        for r in range(3)
                    ]
                    if oracles.line_block_enumeration(block):
                        expect[by : by + 3, bx : bx + 3] = False
            assert np.array_equal(out, expect)

    def test_two_pass_sequence(self, rng):
        a = rng.random((15, 15)) < 0.8
        seq = grid_filter(BinaryMask(a), GridSpec(passes=(3, 5)))
        step = grid_filter(grid_filter(BinaryMask(a), GridSpec(passes=(3,))), GridSpec(passes=(5,)))
        assert seq == step

    def test_sliding_mode_clears_every_window(self):
        a = np.zeros((5, 9), bool)
        a[2, 2:7] = True
        a[1, 4] = True  # extra pixel; windows around the bar still fire
        out = grid_filter(BinaryMask(a), GridSpec(sliding=True))
        assert not out.pixels[2, 2:7].any()
