"""Score extracted components against text/non-text ground truth.

Matching protocol: a truth text region counts as found (TP) when some
extracted component overlaps it with IoU >= iou_min, otherwise it is missed
(FN). A component matching no text region counts one false positive if it
overlaps a non-text region at the same IoU level. Non-text regions touched
by no component are true negatives. Accuracy is (TP+TN)/total.

Bounding boxes are inclusive pixel coordinates (x0, y0, x1, y1); the ground
truth file is JSON: {image, width, height, regions: [{x0, y0, x1, y1, label}]}.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, EmptyMatrixError, GroundTruthSchemaError
from .morphology import LabelMatrix

__all__ = [
    "Region",
    "GroundTruth",
    "ConfusionMatrix",
    "bbox_iou",
    "match_components",
    "accuracy",
    "load_ground_truth",
    "ground_truth_from_dict",
    "confusion_to_dict",
    "write_aggregate_csv",
]

TEXT = "text"
NON_TEXT = "non-text"


@dataclass(frozen=True)
class Region:
    """One labeled ground-truth box, inclusive pixel coordinates."""

    bbox: tuple
    label: str


@dataclass(frozen=True)
class GroundTruth:
    image: str
    width: int
    height: int
    regions: tuple

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        for i, r in enumerate(self.regions):
            x0, y0, x1, y1 = r.bbox
            if not (0 <= x0 <= x1 < self.width and 0 <= y0 <= y1 < self.height):
                raise GroundTruthSchemaError(
                    f"region {i} bbox {r.bbox} outside {self.width}x{self.height} image",
                    region_index=i,
                )
            if r.label not in (TEXT, NON_TEXT):
                raise GroundTruthSchemaError(
                    f"region {i} label must be '{TEXT}' or '{NON_TEXT}', got {r.label!r}",
                    region_index=i,
                )


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValueError("confusion matrix counts cannot be negative")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


def bbox_iou(a, b) -> float:
    """Intersection-over-union of two inclusive-coordinate boxes."""
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0) + 1
    ih = min(ay1, by1) - max(ay0, by0) + 1
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (ax1 - ax0 + 1) * (ay1 - ay0 + 1)
    area_b = (bx1 - bx0 + 1) * (by1 - by0 + 1)
    return inter / (area_a + area_b - inter)


def _pixel_iou(labels: np.ndarray, comp_id: int, comp_area: int, bbox) -> float:
    x0, y0, x1, y1 = bbox
    window = labels[y0 : y1 + 1, x0 : x1 + 1]
    inter = int((window == comp_id).sum())
    box_area = (x1 - x0 + 1) * (y1 - y0 + 1)
    union = comp_area + box_area - inter
    return inter / union if union > 0 else 0.0


def match_components(
    labels: LabelMatrix,
    stats,
    truth: GroundTruth,
    iou_min: float = 0.5,
    mode: str = "bbox",
) -> ConfusionMatrix:
    """Component-level confusion counts between extraction and ground truth.

    mode='bbox' compares component bounding boxes against truth boxes;
    mode='pixel' compares the component's actual pixel set against the truth
    box's pixel set.
    """
    if not 0 < iou_min <= 1:
        raise ValueError(f"iou_min must lie in (0, 1], got {iou_min}")
    if mode not in ("bbox", "pixel"):
        raise ValueError(f"mode must be 'bbox' or 'pixel', got {mode!r}")
    if (labels.width, labels.height) != (truth.width, truth.height):
        raise DimensionMismatchError(
            f"labels are {labels.width}x{labels.height} but truth says "
            f"{truth.width}x{truth.height}"
        )

    def iou(comp, region) -> float:
        if mode == "bbox":
            return bbox_iou(comp.bbox, region.bbox)
        return _pixel_iou(labels.labels, comp.id, comp.area, region.bbox)

    stats = sorted(stats, key=lambda s: s.id)
    text_regions = [r for r in truth.regions if r.label == TEXT]
    non_text_regions = [r for r in truth.regions if r.label == NON_TEXT]

    tp = fn = fp = tn = 0
    matched_comp = {s.id: False for s in stats}

    for region in text_regions:
        hit = False
        for comp in stats:
            if iou(comp, region) >= iou_min:
                hit = True
                matched_comp[comp.id] = True
        if hit:
            tp += 1
        else:
            fn += 1

    touched_non_text = [False] * len(non_text_regions)
    for comp in stats:
        if matched_comp[comp.id]:
            continue
        overlaps = False
        for j, region in enumerate(non_text_regions):
            if iou(comp, region) >= iou_min:
                overlaps = True
                touched_non_text[j] = True
        if overlaps:
            fp += 1  # one false positive per stray component

    tn = sum(1 for t in touched_non_text if not t)
    return ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)


def accuracy(cm: ConfusionMatrix) -> float:
    """(TP + TN) / total; errors on an empty matrix."""
    if cm.total == 0:
        raise EmptyMatrixError("confusion matrix has no counts")
    return (cm.tp + cm.tn) / cm.total


def ground_truth_from_dict(doc: dict) -> GroundTruth:
    """Parse and validate one ground-truth document."""
    if not isinstance(doc, dict):
        raise GroundTruthSchemaError("ground truth must be a JSON object")
    for key in ("image", "width", "height", "regions"):
        if key not in doc:
            raise GroundTruthSchemaError(f"missing required key {key!r}")
    if not isinstance(doc["regions"], list):
        raise GroundTruthSchemaError("'regions' must be a list")
    regions = []
    for i, r in enumerate(doc["regions"]):
        if not isinstance(r, dict):
            raise GroundTruthSchemaError(f"region {i} must be an object", region_index=i)
        try:
            bbox = (int(r["x0"]), int(r["y0"]), int(r["x1"]), int(r["y1"]))
            label = r["label"]
        except (KeyError, ValueError, TypeError) as e:
            raise GroundTruthSchemaError(f"region {i} malformed: {e}", region_index=i) from e
        regions.append(Region(bbox=bbox, label=label))
    return GroundTruth(
        image=str(doc["image"]),
        width=int(doc["width"]),
        height=int(doc["height"]),
        regions=tuple(regions),
    )


def load_ground_truth(path) -> GroundTruth:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise GroundTruthSchemaError(f"invalid JSON in {path}: {e}") from e
    return ground_truth_from_dict(doc)


def confusion_to_dict(cm: ConfusionMatrix) -> dict:
    return {
        "tp": cm.tp,
        "fn": cm.fn,
        "fp": cm.fp,
        "tn": cm.tn,
        "accuracy": accuracy(cm),
    }


def write_aggregate_csv(rows, out):
    """Write per-image confusion rows plus a TOTAL row.

    rows: iterable of (image_name, ConfusionMatrix). `out` is a writable
    text stream or a path.
    """
    close = False
    if isinstance(out, (str, Path)):
        out = open(out, "w", newline="", encoding="utf-8")
        close = True
    try:
        writer = csv.writer(out)
        writer.writerow(["image", "tp", "fn", "fp", "tn", "accuracy"])
        total = ConfusionMatrix()
        for name, cm in rows:
            writer.writerow([name, cm.tp, cm.fn, cm.fp, cm.tn, f"{accuracy(cm):.6f}"])
            total = ConfusionMatrix(
                tp=total.tp + cm.tp,
                fn=total.fn + cm.fn,
                fp=total.fp + cm.fp,
                tn=total.tn + cm.tn,
            )
        writer.writerow(
            ["TOTAL", total.tp, total.fn, total.fp, total.tn, f"{accuracy(total):.6f}"]
        )
        return total
    finally:
        if close:
            out.close()
