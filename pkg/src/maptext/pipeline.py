"""End-to-end extraction pipeline with cached, fingerprinted stages.

Stage order: i_rgb -> i_gray -> i_mask -> i_e -> i_d -> i_mcc -> i_o -> i_f.
Each stage's fingerprint hashes the config slice that produced it plus its
parent's fingerprint, so reruns after a parameter change recompute exactly
the downstream stages and reuse everything upstream, bit-identically to a
full run. Threshold sweeps additionally reuse the labeling of i_d, which is
what makes interactive tuning of the area threshold cheap.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import fcm, gridfilter, morphology, raster
from .errors import DimensionMismatchError, MapTextError, StaleStageSetError, ThresholdOutOfRangeError
from .fcm import FcmConfig
from .gridfilter import GridSpec
from .morphology import StructuringElement
from .raster import BinaryMask, GrayImage, RgbImage

__all__ = [
    "STAGES",
    "PipelineConfig",
    "StageSet",
    "SweepEntry",
    "ConfigFieldError",
    "run_pipeline",
    "rerun_from_stage",
    "regenerate_text",
    "threshold_sweep",
    "config_to_json",
    "config_from_json",
]

STAGES = ("i_rgb", "i_gray", "i_mask", "i_e", "i_d", "i_mcc", "i_o", "i_f")


class ConfigFieldError(ValueError):
    """A config document field failed validation; carries the field name."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable parameter of the extraction pipeline."""

    fcm: FcmConfig = FcmConfig(k=3)
    selection: str | int = "darkest"
    denoise_window: int = 3
    se: StructuringElement = StructuringElement.square(3)
    dilate_iterations: int = 1
    connectivity: int = 8
    area_threshold: int = 2000
    grid: GridSpec = GridSpec()
    cc_grid_repeats: tuple | None = None
    bg_color: int = 255

    def __post_init__(self):
        if self.denoise_window < 3 or self.denoise_window % 2 == 0:
            raise ValueError(f"denoise_window must be an odd integer >= 3, got {self.denoise_window}")
        if self.dilate_iterations < 1:
            raise ValueError(f"dilate_iterations must be >= 1, got {self.dilate_iterations}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.area_threshold < 1:
            raise ValueError(f"area_threshold must be positive, got {self.area_threshold}")
        if not 0 <= self.bg_color <= 255:
            raise ValueError(f"bg_color must lie in [0, 255], got {self.bg_color}")
        if self.cc_grid_repeats is not None:
            rounds = tuple((int(t), g) for t, g in self.cc_grid_repeats)
            if not rounds:
                raise ValueError("cc_grid_repeats must contain at least one round")
            for t, g in rounds:
                if t < 1:
                    raise ValueError(f"round threshold must be positive, got {t}")
                if not isinstance(g, GridSpec):
                    raise ValueError("each round needs a GridSpec")
            object.__setattr__(self, "cc_grid_repeats", rounds)

    @property
    def rounds(self) -> tuple:
        """Ordered (threshold, grid) rounds; defaults to one round."""
        if self.cc_grid_repeats is not None:
            return self.cc_grid_repeats
        return ((self.area_threshold, self.grid),)

    def with_threshold(self, t: int) -> "PipelineConfig":
        """Config with the first round's area threshold replaced by t."""
        if self.cc_grid_repeats is None:
            return replace(self, area_threshold=int(t))
        rounds = ((int(t), self.cc_grid_repeats[0][1]),) + self.cc_grid_repeats[1:]
        return replace(self, area_threshold=int(t), cc_grid_repeats=rounds)


@dataclass
class StageSet:
    """All computed stage planes plus the fingerprints that produced them."""

    image_fingerprint: str
    planes: dict = field(default_factory=dict)
    fingerprints: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    label_cache: dict = field(default_factory=dict)

    def stage(self, name: str):
        if name not in STAGES:
            raise KeyError(f"unknown stage {name!r}")
        return self.planes[name]


@dataclass
class SweepEntry:
    """One threshold's outcome in a sweep; error is set when that T failed."""

    t: int
    component_count: int | None = None
    foreground_area: int | None = None
    i_f: GrayImage | None = None
    error: Exception | None = None


def image_fingerprint(img: RgbImage) -> str:
    h = hashlib.sha256()
    h.update(f"{img.width}x{img.height}:".encode())
    h.update(img.pixels.tobytes())
    return h.hexdigest()


def _se_json(se: StructuringElement) -> dict:
    return {"width": se.width, "height": se.height, "hits": sorted(se.hits)}


def _grid_json(g: GridSpec) -> dict:
    return {"block": g.block, "passes": list(g.passes), "sliding": g.sliding}


def _fcm_json(f: FcmConfig) -> dict:
    return {
        "k": f.k,
        "fuzzifier": f.fuzzifier,
        "epsilon": f.epsilon,
        "max_iterations": f.max_iterations,
        "seed": f.seed,
    }


def config_to_json(cfg: PipelineConfig) -> dict:
    """JSON-ready dict mirroring PipelineConfig field names."""
    return {
        "fcm": _fcm_json(cfg.fcm),
        "selection": cfg.selection,
        "denoise_window": cfg.denoise_window,
        "se": _se_json(cfg.se),
        "dilate_iterations": cfg.dilate_iterations,
        "connectivity": cfg.connectivity,
        "area_threshold": cfg.area_threshold,
        "grid": _grid_json(cfg.grid),
        "cc_grid_repeats": None
        if cfg.cc_grid_repeats is None
        else [[t, _grid_json(g)] for t, g in cfg.cc_grid_repeats],
        "bg_color": cfg.bg_color,
    }


def _grid_from_json(d, field_name: str) -> GridSpec:
    if not isinstance(d, dict):
        raise ConfigFieldError(field_name, "expected an object with block/passes")
    try:
        return GridSpec(
            block=int(d.get("block", 3)),
            passes=None if d.get("passes") is None else tuple(int(b) for b in d["passes"]),
            sliding=bool(d.get("sliding", False)),
        )
    except (MapTextError, ValueError, TypeError) as e:
        raise ConfigFieldError(field_name, str(e)) from e


def config_from_json(doc: dict, base: PipelineConfig | None = None) -> PipelineConfig:
    """Build a config from a (possibly partial) JSON document over `base`.

    Unknown fields and invalid values raise ConfigFieldError naming the field.
    """
    cfg = base if base is not None else PipelineConfig()
    if not isinstance(doc, dict):
        raise ConfigFieldError("(root)", "config document must be a JSON object")
    known = set(config_to_json(cfg))
    for key in doc:
        if key not in known:
            raise ConfigFieldError(key, "unknown config field")
    kwargs = {}
    try:
        if "fcm" in doc:
            f = doc["fcm"]
            if not isinstance(f, dict):
                raise ConfigFieldError("fcm", "expected an object")
            merged = _fcm_json(cfg.fcm)
            for k in f:
                if k not in merged:
                    raise ConfigFieldError(f"fcm.{k}", "unknown config field")
            merged.update(f)
            try:
                kwargs["fcm"] = FcmConfig(
                    k=int(merged["k"]),
                    fuzzifier=float(merged["fuzzifier"]),
                    epsilon=float(merged["epsilon"]),
                    max_iterations=int(merged["max_iterations"]),
                    seed=int(merged["seed"]),
                )
            except (ValueError, TypeError) as e:
                raise ConfigFieldError("fcm", str(e)) from e
        if "selection" in doc:
            sel = doc["selection"]
            if not (sel in ("darkest", "brightest") or isinstance(sel, int)):
                raise ConfigFieldError("selection", "must be 'darkest', 'brightest' or a cluster index")
            kwargs["selection"] = sel
        for name, caster in (
            ("denoise_window", int),
            ("dilate_iterations", int),
            ("connectivity", int),
            ("area_threshold", int),
            ("bg_color", int),
        ):
            if name in doc:
                try:
                    kwargs[name] = caster(doc[name])
                except (ValueError, TypeError) as e:
                    raise ConfigFieldError(name, str(e)) from e
        if "se" in doc:
            s = doc["se"]
            if not isinstance(s, dict):
                raise ConfigFieldError("se", "expected an object with width/height/hits")
            try:
                kwargs["se"] = StructuringElement(
                    width=int(s["width"]),
                    height=int(s["height"]),
                    hits=frozenset(tuple(h) for h in s["hits"]),
                )
            except (KeyError, ValueError, TypeError) as e:
                raise ConfigFieldError("se", str(e)) from e
        if "grid" in doc:
            kwargs["grid"] = _grid_from_json(doc["grid"], "grid")
        if "cc_grid_repeats" in doc:
            rep = doc["cc_grid_repeats"]
            if rep is None:
                kwargs["cc_grid_repeats"] = None
            else:
                rounds = []
                for i, entry in enumerate(rep):
                    try:
                        t, g = entry
                    except (ValueError, TypeError) as e:
                        raise ConfigFieldError(
                            f"cc_grid_repeats[{i}]", "expected [threshold, grid] pairs"
                        ) from e
                    rounds.append((int(t), _grid_from_json(g, f"cc_grid_repeats[{i}]")))
                kwargs["cc_grid_repeats"] = tuple(rounds)
    except ConfigFieldError:
        raise
    try:
        return replace(cfg, **kwargs)
    except (MapTextError, ValueError) as e:
        # dataclass validation: attribute the first offending field if we can
        for name, value in kwargs.items():
            try:
                replace(cfg, **{name: value})
            except (MapTextError, ValueError):
                raise ConfigFieldError(name, str(e)) from e
        raise ConfigFieldError("(config)", str(e)) from e


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def stage_fingerprints(cfg: PipelineConfig, image_fp: str) -> dict:
    """Chained per-stage fingerprints for a config applied to an image."""
    rounds = cfg.rounds
    slices = {
        "i_rgb": {"image": image_fp},
        "i_gray": {"denoise_window": cfg.denoise_window},
        "i_mask": {"fcm": _fcm_json(cfg.fcm), "selection": cfg.selection},
        "i_e": {},
        "i_d": {"se": _se_json(cfg.se), "dilate_iterations": cfg.dilate_iterations},
        "i_mcc": {"connectivity": cfg.connectivity, "area_threshold": rounds[0][0]},
        "i_o": {"rounds": [[t, _grid_json(g)] for t, g in rounds]},
        "i_f": {"bg_color": cfg.bg_color},
    }
    fps = {}
    parent = ""
    for name in STAGES:
        digest = hashlib.sha256()
        digest.update(parent.encode())
        digest.update(_canonical(slices[name]).encode())
        parent = digest.hexdigest()
        fps[name] = parent
    return fps


def regenerate_text(mask: BinaryMask, gray: GrayImage, bg: int = 255) -> GrayImage:
    """Keep gray values under the mask, paint everything else background."""
    if (mask.width, mask.height) != (gray.width, gray.height):
        raise DimensionMismatchError(
            f"mask is {mask.width}x{mask.height} but gray is {gray.width}x{gray.height}"
        )
    out = np.where(mask.pixels, gray.pixels, np.uint8(bg))
    return GrayImage(out)


def _attribute(stage: str):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, MapTextError) and exc.stage is None:
                exc.stage = stage
            return False

    return _Ctx()


def _execute(
    img: RgbImage,
    cfg: PipelineConfig,
    reuse: StageSet | None = None,
    stop_after: str | None = None,
) -> StageSet:
    image_fp = image_fingerprint(img)
    if reuse is not None and reuse.image_fingerprint != image_fp:
        raise StaleStageSetError("cached stages belong to a different image")
    fps = stage_fingerprints(cfg, image_fp)

    out = StageSet(image_fingerprint=image_fp)
    if reuse is not None:
        out.label_cache = dict(reuse.label_cache)

    # Longest reusable prefix: chained hashing means a matching stage implies
    # all of its ancestors match too.
    start = 0
    if reuse is not None:
        for i, name in enumerate(STAGES):
            if reuse.fingerprints.get(name) == fps[name]:
                if name not in reuse.planes:
                    raise StaleStageSetError(f"stage {name} fingerprint matches but its plane is missing")
                start = i + 1
            else:
                break
        for name in STAGES[:start]:
            out.planes[name] = reuse.planes[name]
        if start > STAGES.index("i_mask"):
            for k in ("j_m", "iterations", "converged"):
                out.summary[k] = reuse.summary[k]
        if start > STAGES.index("i_mcc"):
            for k in ("component_count", "foreground_area"):
                out.summary[k] = reuse.summary[k]

    stop_index = len(STAGES) - 1 if stop_after is None else STAGES.index(stop_after)
    # only stages that actually carry a plane get a fingerprint recorded
    out.fingerprints = {name: fps[name] for name in STAGES[: stop_index + 1]}

    for idx in range(start, stop_index + 1):
        name = STAGES[idx]
        if name == "i_rgb":
            out.planes[name] = img
        elif name == "i_gray":
            with _attribute(name):
                gray = raster.to_grayscale(out.planes["i_rgb"])
                out.planes[name] = raster.median_denoise(gray, cfg.denoise_window)
        elif name == "i_mask":
            with _attribute(name):
                mask, model = fcm.segment(out.planes["i_gray"], cfg.fcm, cfg.selection)
                out.planes[name] = mask
                out.summary["j_m"] = model.validity
                out.summary["iterations"] = model.iterations
                out.summary["converged"] = model.converged
        elif name == "i_e":
            with _attribute(name):
                out.planes[name] = morphology.prewitt_edges(out.planes["i_mask"])
        elif name == "i_d":
            with _attribute(name):
                out.planes[name] = morphology.dilate(out.planes["i_e"], cfg.se, cfg.dilate_iterations)
        elif name == "i_mcc":
            # First round's labeling is cached: sweeping T reuses it.
            with _attribute(name):
                t0, _ = cfg.rounds[0]
                current = out.planes["i_d"]
                self_area = current.width * current.height
                if not 0 < t0 < self_area:
                    raise ThresholdOutOfRangeError(
                        f"threshold must satisfy 0 < T < {self_area} (width*height), got {t0}"
                    )
                key = (fps["i_d"], cfg.connectivity)
                if key in out.label_cache:
                    labels, stats = out.label_cache[key]
                else:
                    labels, stats = morphology.label_components(current, cfg.connectivity)
                    out.label_cache[key] = (labels, stats)
                out.planes[name] = morphology.filter_components(labels, stats, t0)
                out.summary["component_count"] = sum(1 for s in stats if s.area >= t0)
                out.summary["foreground_area"] = out.planes[name].foreground_count()
        elif name == "i_o":
            with _attribute(name):
                _, g0 = cfg.rounds[0]
                current = gridfilter.grid_filter(out.planes["i_mcc"], g0)
                for t, g in cfg.rounds[1:]:
                    labels, stats = morphology.label_components(current, cfg.connectivity)
                    current = morphology.filter_components(labels, stats, t)
                    current = gridfilter.grid_filter(current, g)
                out.planes[name] = current
        elif name == "i_f":
            with _attribute(name):
                out.planes[name] = regenerate_text(
                    out.planes["i_o"], out.planes["i_gray"], cfg.bg_color
                )
    return out


def run_pipeline(img: RgbImage, cfg: PipelineConfig) -> StageSet:
    """Execute all stages from scratch; deterministic for a fixed seed."""
    return _execute(img, cfg)


def rerun_from_stage(stages: StageSet, cfg: PipelineConfig) -> StageSet:
    """Recompute only the stages whose config slice changed.

    The result is bit-identical to run_pipeline on the same image with the
    new config; upstream planes are shared, not copied.
    """
    if "i_rgb" not in stages.planes:
        raise StaleStageSetError("stage set has no source image plane")
    return _execute(stages.planes["i_rgb"], cfg, reuse=stages)


def threshold_sweep(img: RgbImage, cfg: PipelineConfig, t_values, jobs: int = 1):
    """Run the pipeline once per threshold, reusing all stages above i_mcc.

    Returns one SweepEntry per requested T in order. Entries that fail keep
    their error instead of aborting the sweep. No automatic selection is
    made: choosing the satisfactory T is the caller's job.
    """
    ts = [int(t) for t in t_values]
    if not ts:
        return []
    base = _execute(img, cfg, stop_after="i_d")

    def one(t: int) -> SweepEntry:
        try:
            full = _execute(img, cfg.with_threshold(t), reuse=base)
        except MapTextError as e:
            return SweepEntry(t=t, error=e)
        return SweepEntry(
            t=t,
            component_count=full.summary["component_count"],
            foreground_area=full.summary["foreground_area"],
            i_f=full.planes["i_f"],
        )

    if jobs <= 1:
        return [one(t) for t in ts]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, ts))
