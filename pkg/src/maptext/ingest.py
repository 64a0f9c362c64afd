"""Image decoding/encoding and static-map fetching.

Supported file formats: PNG, JPEG, PGM/PPM. Grayscale sources are replicated
across RGB channels on load. Fetching substitutes coordinates into a URL
template, which keeps the package runnable offline against any tile server
or a local fixture server; responses can be cached on disk.
"""

from __future__ import annotations

import hashlib
import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests
from PIL import Image, UnidentifiedImageError

from .errors import (
    CorruptFileError,
    HttpStatusError,
    IoError,
    NetworkError,
    UnsupportedFormatError,
)
from .raster import BinaryMask, GrayImage, RgbImage

__all__ = [
    "MapRequest",
    "load_image",
    "decode_image",
    "save_image",
    "encode_png",
    "fetch_map",
    "CACHE_DIR_ENV",
]

CACHE_DIR_ENV = "MAPTEXT_CACHE_DIR"

_SUPPORTED_FORMATS = {"PNG", "JPEG", "PPM"}  # Pillow reports PGM/PBM/PPM as "PPM"
_SUFFIX_FORMAT = {
    ".png": "PNG",
    ".jpg": "JPEG",
    ".jpeg": "JPEG",
    ".pgm": "PPM",
    ".ppm": "PPM",
}


@dataclass(frozen=True)
class MapRequest:
    """A static-map request resolved through a URL template.

    The template may use {lat}, {lon}, {zoom}, {w} and {h} placeholders.
    """

    latitude: float
    longitude: float
    zoom: int
    width: int
    height: int
    url_template: str

    def __post_init__(self):
        if not -90 <= self.latitude <= 90:
            raise ValueError(f"latitude must lie in [-90, 90], got {self.latitude}")
        if not -180 <= self.longitude <= 180:
            raise ValueError(f"longitude must lie in [-180, 180], got {self.longitude}")
        if self.zoom < 0:
            raise ValueError(f"zoom must be >= 0, got {self.zoom}")
        if self.width < 1 or self.height < 1:
            raise ValueError("requested dimensions must be positive")

    def url(self) -> str:
        return self.url_template.format(
            lat=self.latitude,
            lon=self.longitude,
            zoom=self.zoom,
            w=self.width,
            h=self.height,
        )


def decode_image(data: bytes) -> RgbImage:
    """Decode raw PNG/JPEG/PGM/PPM bytes into an RgbImage."""
    try:
        img = Image.open(io.BytesIO(data))
        fmt = img.format
        if fmt not in _SUPPORTED_FORMATS:
            raise UnsupportedFormatError(f"unsupported image format {fmt!r}")
        img.load()
    except UnidentifiedImageError as e:
        raise UnsupportedFormatError(f"not a decodable image: {e}") from e
    except UnsupportedFormatError:
        raise
    except (OSError, SyntaxError, ValueError) as e:
        raise CorruptFileError(f"image data is corrupt: {e}") from e
    return RgbImage(np.asarray(img.convert("RGB"), dtype=np.uint8))


def load_image(path) -> RgbImage:
    """Load an image file; grayscale sources replicate across channels."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    return decode_image(data)


def _to_pil(img) -> Image.Image:
    if isinstance(img, RgbImage):
        return Image.fromarray(img.pixels, mode="RGB")
    if isinstance(img, GrayImage):
        return Image.fromarray(img.pixels, mode="L")
    if isinstance(img, BinaryMask):
        return Image.fromarray(img.pixels.astype(np.uint8) * 255, mode="L")
    raise TypeError(f"cannot save object of type {type(img).__name__}")


def save_image(img, path, format: str | None = None) -> None:
    """Write a raster to disk; format inferred from the suffix if omitted.

    PNG and PGM/PPM round-trip losslessly; binary masks are written as
    0/255 grayscale.
    """
    path = Path(path)
    if format is None:
        try:
            format = _SUFFIX_FORMAT[path.suffix.lower()]
        except KeyError:
            raise UnsupportedFormatError(f"cannot infer format from suffix {path.suffix!r}")
    format = format.upper()
    if format in ("PGM", "PPM"):
        format = "PPM"
    if format not in _SUPPORTED_FORMATS:
        raise UnsupportedFormatError(f"unsupported save format {format!r}")
    try:
        _to_pil(img).save(path, format=format)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def encode_png(img) -> bytes:
    """PNG bytes for any raster type (deterministic for equal pixels)."""
    buf = io.BytesIO()
    _to_pil(img).save(buf, format="PNG")
    return buf.getvalue()


def _cache_path(cache_dir: Path, url: str) -> Path:
    return cache_dir / (hashlib.sha256(url.encode()).hexdigest() + ".img")


def fetch_map(
    req: MapRequest,
    *,
    timeout: float = 10.0,
    retries: int = 0,
    cache_dir=None,
    session: requests.Session | None = None,
) -> RgbImage:
    """Fetch a static map image over HTTP GET.

    With caching enabled (explicit cache_dir or the MAPTEXT_CACHE_DIR env
    var), identical requests are served byte-equal from disk; cache writes
    are atomic (write to a temp file, then rename).
    """
    url = req.url()
    if cache_dir is None:
        env = os.environ.get(CACHE_DIR_ENV)
        cache_dir = Path(env) if env else None
    else:
        cache_dir = Path(cache_dir)

    if cache_dir is not None:
        cached = _cache_path(cache_dir, url)
        if cached.exists():
            return decode_image(cached.read_bytes())

    http = session if session is not None else requests
    last_error: Exception | None = None
    response = None
    for _ in range(retries + 1):
        try:
            response = http.get(url, timeout=timeout)
            break
        except requests.RequestException as e:
            last_error = e
    if response is None:
        raise NetworkError(f"request failed for {url}: {last_error}") from last_error
    if response.status_code != 200:
        raise HttpStatusError(response.status_code, url)

    data = response.content
    img = decode_image(data)

    if cache_dir is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".part")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, _cache_path(cache_dir, url))
        except OSError as e:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise IoError(f"cannot write cache entry: {e}") from e
    return img
