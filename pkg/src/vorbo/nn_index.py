"""Batched nearest-neighbour queries with deterministic tie-breaking.

Queries are answered from a k-d tree.  A tree query alone is not enough for
reproducible results: when a query point is exactly equidistant to two or
more design points the tree returns an arbitrary one.  We therefore ask the
tree for the two nearest neighbours, and whenever their distances coincide
we recompute distances for just those queries by (chunked) brute force and
take the first minimiser, so ties always resolve to the smallest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree, minkowski_distance

from .metrics import Metric

# Cap on the element count of one brute-force distance block (queries x N x P
# doubles); keeps the rare tie-resolution path within a few hundred MB.
_CHUNK_ELEMS = 2**24


@dataclass
class NnIndex:
    """Nearest-neighbour index over a fixed set of points under one metric."""

    points: np.ndarray
    metric: Metric
    tree: cKDTree


def build(points: np.ndarray, metric: Metric) -> NnIndex:
    """Build an index over `points` (an N x P array, N >= 1)."""
    points = np.ascontiguousarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError(f"points must be a non-empty 2-D array, got shape {points.shape}")
    if not np.isfinite(points).all():
        raise ValueError("points must be finite")
    return NnIndex(points=points, metric=metric, tree=cKDTree(points))


def _brute_nearest(index: NnIndex, queries: np.ndarray) -> np.ndarray:
    """Exhaustive nearest-neighbour scan; first minimum wins."""
    n, p = index.points.shape
    chunk = max(1, _CHUNK_ELEMS // max(1, n * p))
    out = np.empty(queries.shape[0], dtype=np.intp)
    for lo in range(0, queries.shape[0], chunk):
        block = queries[lo : lo + chunk]
        d = minkowski_distance(block[:, None, :], index.points[None, :, :], p=index.metric.p)
        out[lo : lo + chunk] = np.argmin(d, axis=1)
    return out


def nearest_batch(index: NnIndex, queries: np.ndarray) -> np.ndarray:
    """Index of the nearest point for each query row (ties -> smallest index).

    Parameters
    ----------
    queries : (M, P) array
        Query points; need not lie inside the unit cube.

    Returns
    -------
    (M,) integer array of indices into ``index.points``.
    """
    queries = np.asarray(queries, dtype=float)
    if queries.ndim != 2 or queries.shape[1] != index.points.shape[1]:
        raise ValueError(
            f"queries must have shape (M, {index.points.shape[1]}), got {queries.shape}"
        )
    n = index.points.shape[0]
    if n == 1 or queries.shape[0] == 0:
        return np.zeros(queries.shape[0], dtype=np.intp)

    d, i = index.tree.query(queries, k=2, p=index.metric.p)
    nearest = i[:, 0].astype(np.intp)

    # A tie between the top two candidates means the tree's pick is arbitrary;
    # re-decide those queries with a single consistent arithmetic.  Re-check
    # the two candidate distances outside the tree as well, since the tree's
    # internal rounding may differ from a direct evaluation.
    pair = minkowski_distance(
        queries[:, None, :], index.points[i.reshape(-1)].reshape(i.shape + (-1,)), p=index.metric.p
    )
    tied = (d[:, 0] == d[:, 1]) | (pair[:, 0] == pair[:, 1])
    if tied.any():
        nearest[tied] = _brute_nearest(index, queries[tied])
    return nearest
