"""K-means clustering of box dimensions under IoU distance.

Boxes are clustered by shape alone: the distance between a box and a
centroid is 1 - IoU of the two rectangles laid over a common center.
Centroids are per-cluster means of width and height. Runs are seeded and
fully deterministic; restarts reseed the initialization and the best run
by mean IoU wins.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .yolo_decode import AnchorPrior

MAX_ITERATIONS = 300


@dataclass(frozen=True)
class ClusterResult:
    anchors: tuple[AnchorPrior, ...]  # sorted by area, largest first
    mean_iou: float
    assignments: tuple[int, ...]  # per input box, index into anchors
    iterations: int
    seed: int


def _pairwise_dimension_iou(dims: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """IoU of every box shape against every centroid shape, (n, k)."""
    inter = np.minimum(dims[:, None, 0], centroids[None, :, 0]) * np.minimum(
        dims[:, None, 1], centroids[None, :, 1]
    )
    areas = dims[:, 0] * dims[:, 1]
    centroid_areas = centroids[:, 0] * centroids[:, 1]
    return inter / (areas[:, None] + centroid_areas[None, :] - inter)


def _init_centroids(dims: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ style init with squared (1 - IoU) weights."""
    n = dims.shape[0]
    centroids = np.empty((k, 2))
    centroids[0] = dims[rng.integers(n)]
    for j in range(1, k):
        dist = 1.0 - _pairwise_dimension_iou(dims, centroids[:j]).max(axis=1)
        weights = dist * dist
        # k <= number of distinct shapes guarantees some positive weight
        centroids[j] = dims[rng.choice(n, p=weights / weights.sum())]
    return centroids


def _kmeans_single(dims: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, np.ndarray, int]:
    rng = np.random.default_rng(seed)
    centroids = _init_centroids(dims, k, rng)
    assign = np.argmax(_pairwise_dimension_iou(dims, centroids), axis=1)
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        centroids = _update_centroids(dims, centroids, assign, k)
        new_assign = np.argmax(_pairwise_dimension_iou(dims, centroids), axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return centroids, assign, iterations


def _update_centroids(
    dims: np.ndarray, centroids: np.ndarray, assign: np.ndarray, k: int
) -> np.ndarray:
    new = np.empty_like(centroids)
    empty = []
    for j in range(k):
        members = dims[assign == j]
        if members.shape[0] == 0:
            empty.append(j)
            new[j] = centroids[j]
        else:
            new[j] = members.mean(axis=0)
    if empty:
        # Reseed each empty cluster with the box worst served by its centroid.
        own_iou = _pairwise_dimension_iou(dims, new)[np.arange(dims.shape[0]), assign]
        order = np.argsort(own_iou, kind="stable")
        for j, box_idx in zip(empty, order):
            new[j] = dims[box_idx]
    return new


def kmeans_iou(
    dims: Sequence[tuple[float, float]] | np.ndarray,
    k: int,
    seed: int = 0,
    restarts: int = 1,
) -> ClusterResult:
    """Cluster (width, height) pairs into k anchors under IoU distance.

    Runs restarts times with seeds seed, seed + 1, ... and returns the run
    with the highest mean IoU (ties keep the lowest seed). Identical inputs
    always produce an identical result.
    """
    data = np.array(dims, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] == 0:
        raise InputError("dims must be a non-empty list of (width, height) pairs")
    if not np.all(data > 0):
        raise InputError("box dimensions must be positive")
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    distinct = np.unique(data, axis=0).shape[0]
    if k > distinct:
        raise InputError(f"k={k} exceeds the {distinct} distinct box shapes")
    if restarts < 1:
        raise InputError(f"restarts must be >= 1, got {restarts}")

    best: tuple[float, int, np.ndarray, np.ndarray, int] | None = None
    for r in range(restarts):
        run_seed = seed + r
        centroids, assign, iterations = _kmeans_single(data, k, run_seed)
        per_box = _pairwise_dimension_iou(data, centroids)[
            np.arange(data.shape[0]), assign
        ]
        mean_iou = float(per_box.mean())
        if best is None or mean_iou > best[0]:
            best = (mean_iou, run_seed, centroids, assign, iterations)

    mean_iou, run_seed, centroids, assign, iterations = best
    areas = centroids[:, 0] * centroids[:, 1]
    order = np.lexsort((-centroids[:, 1], -centroids[:, 0], -areas))
    rank = np.empty(k, dtype=np.int64)
    rank[order] = np.arange(k)
    return ClusterResult(
        anchors=tuple(AnchorPrior(float(w), float(h)) for w, h in centroids[order]),
        mean_iou=mean_iou,
        assignments=tuple(int(rank[a]) for a in assign),
        iterations=iterations,
        seed=run_seed,
    )


def sweep_k(
    dims: Sequence[tuple[float, float]] | np.ndarray,
    k_range: Iterable[int],
    seed: int = 0,
    restarts: int = 1,
) -> list[tuple[int, float]]:
    """Run kmeans_iou for each k and report (k, mean_iou) pairs."""
    return [(k, kmeans_iou(dims, k, seed=seed, restarts=restarts).mean_iou) for k in k_range]
