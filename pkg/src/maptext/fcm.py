"""Fuzzy C-Means clustering over 1-D pixel intensities.

Alternating minimization of the weighted within-cluster scatter: soft
memberships from inverse distance ratios, centers as membership-weighted
means, and the scatter itself as the validity index (smaller is better).
Defuzzification into a segmentation mask picks the per-pixel argmax cluster.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyClusterError,
    EmptyClusterWarning,
    IndexOutOfRangeError,
    TooFewDistinctValuesError,
)
from .raster import BinaryMask, GrayImage

__all__ = [
    "FcmConfig",
    "PartitionMatrix",
    "ClusterModel",
    "init_centers",
    "memberships",
    "update_centers",
    "validity",
    "cluster",
    "segment",
    "segment_mask",
]

COLUMN_SUM_TOL = 1e-9


@dataclass(frozen=True)
class FcmConfig:
    """Clustering knobs: cluster count, softness, stopping rule, RNG seed."""

    k: int
    fuzzifier: float = 2.0
    epsilon: float = 1e-4
    max_iterations: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.fuzzifier > 1:
            raise ValueError(f"fuzzifier must be > 1, got {self.fuzzifier}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass(frozen=True, eq=False)
class PartitionMatrix:
    """K x n membership matrix; every point's memberships sum to 1."""

    u: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.u, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"partition matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("partition matrix must be nonempty")
        if np.any(arr < 0) or np.any(arr > 1):
            raise ValueError("memberships must lie in [0, 1]")
        colsums = arr.sum(axis=0)
        if np.any(np.abs(colsums - 1.0) > COLUMN_SUM_TOL):
            worst = float(np.abs(colsums - 1.0).max())
            raise ValueError(f"membership columns must sum to 1 (max deviation {worst:.3e})")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "u", arr)

    @property
    def k(self) -> int:
        return self.u.shape[0]

    @property
    def n(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """Converged clustering state: centers, softness, objective, run stats."""

    centers: np.ndarray
    fuzzifier: float
    validity: float
    iterations: int
    converged: bool

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.centers, dtype=np.float64))
        arr.flags.writeable = False
        object.__setattr__(self, "centers", arr)
        if not self.fuzzifier > 1:
            raise ValueError("fuzzifier must be > 1")
        if self.validity < 0:
            raise ValueError("validity index cannot be negative")

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ClusterModel)
            and np.array_equal(self.centers, other.centers)
            and self.fuzzifier == other.fuzzifier
            and self.validity == other.validity
            and self.iterations == other.iterations
            and self.converged == other.converged
        )


def init_centers(points, k: int, seed: int) -> np.ndarray:
    """Draw k initial centers without replacement from the distinct values."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1)
    if pts.size == 0:
        raise ValueError("points must be nonempty")
    distinct = np.unique(pts)
    if k > distinct.size:
        raise TooFewDistinctValuesError(
            f"need {k} distinct values for {k} centers, input has {distinct.size}"
        )
    rng = np.random.default_rng(seed)
    return rng.choice(distinct, size=k, replace=False)


def memberships(points, centers, fuzzifier: float) -> PartitionMatrix:
    """Membership of every point in every cluster from inverse distance ratios.

    u_ki = 1 / sum_j (d_ki / d_ji)^(2/(m-1)) with d = |z - x|. A point that
    coincides with one or more centers gets membership 1 split equally among
    the coincident centers and 0 elsewhere, which keeps column sums at 1.
    """
    if not fuzzifier > 1:
        raise ValueError(f"fuzzifier must be > 1, got {fuzzifier}")
    pts = np.asarray(points, dtype=np.float64).reshape(-1)
    ctr = np.asarray(centers, dtype=np.float64).reshape(-1)
    if ctr.size < 1:
        raise ValueError("need at least one center")
    d = np.abs(ctr[:, None] - pts[None, :])  # (K, n)
    u = np.empty_like(d)

    zero = d == 0.0
    singular = zero.any(axis=0)
    if singular.any():
        z = zero[:, singular].astype(np.float64)
        u[:, singular] = z / z.sum(axis=0)

    regular = ~singular
    if regular.any():
        dr = d[:, regular]
        # Normalize by the column minimum before exponentiating so huge
        # distance ratios underflow to 0 instead of overflowing.
        ratios = dr / dr.min(axis=0)
        t = ratios ** (-2.0 / (fuzzifier - 1.0))
        u[:, regular] = t / t.sum(axis=0)

    return PartitionMatrix(u)


def update_centers(u: PartitionMatrix, points, fuzzifier: float, previous=None) -> np.ndarray:
    """Membership-weighted mean per cluster: z_k = sum u^m x / sum u^m.

    A cluster whose total weight is zero has no defined mean; its previous
    center is kept (with an EmptyClusterWarning) when one is supplied,
    otherwise EmptyClusterError is raised.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1)
    if u.n != pts.size:
        raise ValueError(f"partition matrix has {u.n} columns but {pts.size} points given")
    w = u.u**fuzzifier
    den = w.sum(axis=1)
    num = w @ pts
    empty = den == 0.0
    if empty.any():
        which = np.flatnonzero(empty).tolist()
        if previous is None:
            raise EmptyClusterError(f"clusters {which} received zero membership mass")
        warnings.warn(
            f"clusters {which} lost all membership mass; keeping previous centers",
            EmptyClusterWarning,
            stacklevel=2,
        )
        prev = np.asarray(previous, dtype=np.float64).reshape(-1)
        out = np.where(empty, prev, np.divide(num, den, out=np.zeros_like(den), where=~empty))
        return out
    return num / den


def validity(u: PartitionMatrix, centers, points, fuzzifier: float) -> float:
    """Weighted within-cluster scatter: sum_k sum_i u_ki^m d^2(z_k, x_i)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1)
    ctr = np.asarray(centers, dtype=np.float64).reshape(-1)
    d2 = (ctr[:, None] - pts[None, :]) ** 2
    return float(((u.u**fuzzifier) * d2).sum())


def cluster(points, config: FcmConfig, trace: list | None = None):
    """Alternate memberships and center updates until the partition settles.

    Stops when max |delta U| < epsilon or after max_iterations. Returns the
    final (PartitionMatrix, ClusterModel); deterministic for a fixed seed.
    When a list is passed as `trace`, one (validity, max_delta) tuple is
    appended per iteration.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1)
    if pts.size == 0:
        raise ValueError("points must be nonempty")
    centers = init_centers(pts, config.k, config.seed)
    u_prev = None
    u = None
    iterations = 0
    converged = False
    for _ in range(config.max_iterations):
        u = memberships(pts, centers, config.fuzzifier)
        centers = update_centers(u, pts, config.fuzzifier, previous=centers)
        iterations += 1
        delta = np.inf if u_prev is None else float(np.abs(u.u - u_prev.u).max())
        if trace is not None:
            trace.append((validity(u, centers, pts, config.fuzzifier), delta))
        if delta < config.epsilon:
            converged = True
            break
        u_prev = u
    model = ClusterModel(
        centers=centers,
        fuzzifier=config.fuzzifier,
        validity=validity(u, centers, pts, config.fuzzifier),
        iterations=iterations,
        converged=converged,
    )
    return u, model


def _select_cluster(centers: np.ndarray, selection) -> int:
    if selection == "darkest":
        return int(np.argmin(centers))
    if selection == "brightest":
        return int(np.argmax(centers))
    if isinstance(selection, (int, np.integer)) and not isinstance(selection, bool):
        if not 0 <= selection < centers.shape[0]:
            raise IndexOutOfRangeError(
                f"cluster index {selection} out of range for K={centers.shape[0]}"
            )
        return int(selection)
    raise ValueError(f"selection must be 'darkest', 'brightest' or a cluster index, got {selection!r}")


def segment(img: GrayImage, config: FcmConfig, selection="darkest"):
    """Cluster the image intensities and return (mask, model).

    Each pixel goes to its argmax-membership cluster (ties to the lowest
    cluster index); the mask holds the pixels of the selected cluster.
    """
    points = img.pixels.astype(np.float64).reshape(-1)
    u, model = cluster(points, config)
    k_sel = _select_cluster(model.centers, selection)
    assign = np.argmax(u.u, axis=0)  # first max = lowest index on ties
    mask = (assign == k_sel).reshape(img.height, img.width)
    return BinaryMask(mask), model


def segment_mask(img: GrayImage, config: FcmConfig, selection="darkest") -> BinaryMask:
    """Segmentation mask of the selected cluster (default: darkest center)."""
    mask, _ = segment(img, config, selection)
    return mask


def validity_by_k(points, ks=(2, 3, 4, 5), fuzzifier: float = 2.0, seed: int = 0):
    """Converged objective per cluster count, for a human to compare.

    Smaller is better at a fixed K, but the raw objective also shrinks as K
    grows, so this reports the numbers instead of picking a winner. Cluster
    counts that exceed the number of distinct values are skipped.
    """
    out = {}
    for k in ks:
        try:
            _, model = cluster(points, FcmConfig(k=int(k), fuzzifier=fuzzifier, seed=seed))
        except TooFewDistinctValuesError:
            continue
        out[int(k)] = model.validity
    return out
