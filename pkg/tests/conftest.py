import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_gray(rng, h, w):
    from maptext.raster import GrayImage

    return GrayImage(rng.integers(0, 256, size=(h, w), dtype=np.uint8))


def random_mask(rng, h, w, p=0.5):
    from maptext.raster import BinaryMask

    return BinaryMask(rng.random((h, w)) < p)
