"""CATE-threshold segmentation, Lloyd's k-means and segment movement."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, rng
from .errors import ValidationError


@dataclass(frozen=True, eq=False)
class SegmentAssignment:
    """Per-unit segment labels.

    For ``cate_quantile`` assignments the labels are ordered by CATE level and
    ``thresholds`` holds the ``k - 1`` cut points. For ``kmeans`` assignments
    the labels follow ascending centroid norm and there are no thresholds.
    """

    labels: np.ndarray
    k: int
    thresholds: tuple = ()
    method: str = "cate_quantile"

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValidationError(f"labels must lie in [0, {self.k})")
        if self.method not in ("cate_quantile", "kmeans", "initial"):
            raise ValidationError(f"unknown segmentation method {self.method!r}")
        th = tuple(float(t) for t in self.thresholds)
        if self.method == "cate_quantile":
            if len(th) != self.k - 1:
                raise ValidationError(f"expected {self.k - 1} thresholds, got {len(th)}")
            if any(b < a for a, b in zip(th, th[1:])):
                raise ValidationError("thresholds must be ascending")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "thresholds", th)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def to_dict(self) -> dict:
        return {"k": self.k, "method": self.method, "thresholds": list(self.thresholds)}


@dataclass(frozen=True, eq=False)
class KmeansResult:
    assignment: SegmentAssignment
    centroids: np.ndarray
    inertia: float
    iterations: int
    inertia_trace: tuple = field(default=(), repr=False)


def segment_by_cate(cate, k: int = 3) -> SegmentAssignment:
    """Split units into ``k`` CATE-ordered segments at empirical quantiles.

    Threshold ``j`` is the ``ceil(j*N/k)``-th smallest CATE (inverted-CDF
    quantile). A unit's label is the number of thresholds strictly below its
    CATE, so ties at a threshold fall to the lower segment and constant input
    puts everyone in segment 0.
    """
    cate = np.asarray(cate, dtype=np.float64).reshape(-1)
    n = cate.shape[0]
    if k < 2:
        raise ValidationError("k must be >= 2")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of units ({n})")
    if not np.all(np.isfinite(cate)):
        raise ValidationError("CATE values must be finite")
    ordered = np.sort(cate)
    ranks = [-(-j * n // k) - 1 for j in range(1, k)]
    thresholds = ordered[ranks]
    labels = np.searchsorted(thresholds, cate, side="left")
    return SegmentAssignment(labels=labels, k=k, thresholds=tuple(thresholds), method="cate_quantile")


def segment_movement(prev: SegmentAssignment, curr: SegmentAssignment, strict: bool = True) -> int:
    """Number of units whose label differs between two assignments.

    Only CATE-quantile assignments have canonically aligned labels, so with
    ``strict`` anything else is rejected. The loop passes ``strict=False`` to
    compare against the initial segmentation.
    """
    if prev.n != curr.n:
        raise ValidationError(f"assignments cover {prev.n} and {curr.n} units")
    if strict:
        if prev.k != curr.k:
            raise ValidationError(f"assignments have k={prev.k} and k={curr.k}")
        if prev.method != "cate_quantile" or curr.method != "cate_quantile":
            raise ValidationError("movement is only defined between cate_quantile assignments")
    return int(np.count_nonzero(prev.labels != curr.labels))


def _plusplus_init(X, k, gen):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[gen.integers(n)]
    _, closest = kernels.nearest_centroid(X, centers[:1])
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = gen.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), gen.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[c] = X[idx]
        _, dist = kernels.nearest_centroid(X, centers[c : c + 1])
        closest = np.minimum(closest, dist)
    return centers


def _lloyd(X, k, gen, tol, max_iter):
    centers = _plusplus_init(X, k, gen)
    trace = []
    it = 0
    for it in range(1, max_iter + 1):
        labels, sqd = kernels.nearest_centroid(X, centers)
        trace.append(float(sqd.sum()))
        sums, counts = kernels.centroid_sums(X, labels, k)
        new = centers.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        empty = np.flatnonzero(~filled)
        if empty.size:
            # reseed each empty cluster at the point farthest from its centroid
            far = np.argsort(-sqd, kind="stable")
            for c, idx in zip(empty, far):
                new[c] = X[idx]
        shift = float(np.sqrt(((new - centers) ** 2).sum(axis=1)).max())
        centers = new
        if shift <= tol and not empty.size:
            break
    labels, sqd = kernels.nearest_centroid(X, centers)
    return labels, centers, float(sqd.sum()), it, tuple(trace) + (float(sqd.sum()),)


def kmeans(X, k: int, seed: int = 0, tol: float = 1e-6, max_iter: int = 300, n_init: int = 1) -> KmeansResult:
    """Lloyd's algorithm with k-means++ seeding.

    Deterministic given the arguments. Clusters are relabelled so that label 0
    has the smallest centroid norm. With ``n_init > 1`` the lowest-inertia run
    among independently seeded restarts is returned.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of points ({n})")
    best = None
    for run in range(n_init):
        out = _lloyd(X, k, rng.stream(seed, rng.KMEANS_INIT, run), tol, max_iter)
        if best is None or out[2] < best[2]:
            best = out
    labels, centers, inertia, iterations, trace = best
    order = np.argsort(np.linalg.norm(centers, axis=1), kind="stable")
    remap = np.empty(k, dtype=np.int64)
    remap[order] = np.arange(k)
    assignment = SegmentAssignment(labels=remap[labels], k=k, method="kmeans")
    return KmeansResult(
        assignment=assignment,
        centroids=centers[order],
        inertia=inertia,
        iterations=iterations,
        inertia_trace=trace,
    )


def inertia_of(X, labels, centroids) -> float:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    diff = X - np.asarray(centroids)[np.asarray(labels)]
    return float((diff**2).sum())
