"""Single-linkage agglomerative clustering cut at a fixed distance.

Cutting a single-linkage dendrogram at height ``d`` yields exactly the
connected components of the graph joining every pair of points at distance
``<= d``, so the flat clustering is computed from a KD-tree neighbour query
instead of building the full merge tree.
"""

from __future__ import annotations

import numba
import numpy as np
from scipy.spatial import cKDTree


@numba.njit(cache=True)
def _component_labels(n, pairs):
    # union-find with path halving; labels numbered by first appearance
    parent = np.arange(n)
    for k in range(pairs.shape[0]):
        a, b = pairs[k, 0], pairs[k, 1]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
    labels = np.empty(n, dtype=np.int64)
    remap = np.full(n, -1, dtype=np.int64)
    next_label = 0
    for i in range(n):
        r = i
        while parent[r] != r:
            r = parent[r]
        if remap[r] < 0:
            remap[r] = next_label
            next_label += 1
        labels[i] = remap[r]
    return labels


def single_linkage(points, threshold: float) -> np.ndarray:
    """Flat single-linkage labels for ``points`` merged up to ``threshold``.

    Labels are numbered by first appearance in ``points`` order.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if pts.ndim == 1:
        pts = pts[:, None]
    pairs = cKDTree(pts).query_pairs(threshold, output_type="ndarray")
    return _component_labels(n, pairs.astype(np.int64).reshape(-1, 2))


def cluster_members(points, threshold: float, min_size: int = 1) -> list[np.ndarray]:
    """Index arrays of every single-linkage cluster with at least ``min_size`` members."""
    labels = single_linkage(points, threshold)
    if len(labels) == 0:
        return []
    counts = np.bincount(labels)
    order = np.argsort(labels, kind="stable")
    groups = np.split(order, np.cumsum(counts)[:-1])
    return [g for g in groups if len(g) >= min_size]
