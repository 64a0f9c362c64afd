"""Unsupervised text extraction from map raster images.

Segmentation by fuzzy c-means over pixel intensities, Prewitt edges,
dilation, connected-component area filtering and grid-structure line
removal, with a batch CLI and an interactive HTTP tuning service.
"""

from .errors import MapTextError
from .fcm import FcmConfig
from .gridfilter import GridSpec
from .morphology import StructuringElement
from .pipeline import PipelineConfig, StageSet, run_pipeline, threshold_sweep
from .raster import BinaryMask, GrayImage, RgbImage

__version__ = "0.1.0"

__all__ = [
    "MapTextError",
    "FcmConfig",
    "GridSpec",
    "StructuringElement",
    "PipelineConfig",
    "StageSet",
    "run_pipeline",
    "threshold_sweep",
    "RgbImage",
    "GrayImage",
    "BinaryMask",
    "__version__",
]
