"""Complete weighted feature graph and background mean-edge estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .dataset import as_feature_matrix


@dataclass(frozen=True)
class FeatureGraph:
    """Complete graph over reduced feature rows.

    ``edges`` is the dense symmetric matrix of pairwise Euclidean distances
    (zero diagonal) as produced by :func:`build_graph`; ``e_bar`` is the
    background mean edge estimated from the original, unreduced data.
    """

    node_features: np.ndarray
    edges: np.ndarray
    e_bar: float

    @property
    def n_nodes(self) -> int:
        return self.edges.shape[0]

    @property
    def edge_count(self) -> int:
        n = self.n_nodes
        return n * (n - 1) // 2


def build_graph(reduced: np.ndarray, e_bar: float) -> FeatureGraph:
    """Dense pairwise-Euclidean graph over the rows of a reduced matrix."""
    reduced = as_feature_matrix(reduced)
    if e_bar < 0:
        raise ValueError(f"e_bar must be >= 0, got {e_bar}")
    pts = reduced.astype(np.float64)
    if reduced.shape[0] == 1:
        edges = np.zeros((1, 1))
    else:
        edges = squareform(pdist(pts))
    return FeatureGraph(reduced, edges, float(e_bar))


def mean_pairwise_distance(points: np.ndarray, block: int = 4096) -> float:
    """Exact mean Euclidean distance over all unordered row pairs.

    Blocks keep memory bounded for large inputs; per-block sums are
    combined with math.fsum in a fixed order, so the result is
    deterministic and compensated against accumulation error.
    """
    pts = np.asarray(points, dtype=np.float64)
    m = pts.shape[0]
    if m < 2:
        raise ValueError("need at least 2 rows to average pairwise distances")
    sums = []
    for a in range(0, m, block):
        chunk = pts[a : a + block]
        if chunk.shape[0] > 1:
            sums.append(float(np.sum(pdist(chunk))))
        for b in range(a + block, m, block):
            sums.append(float(np.sum(cdist(chunk, pts[b : b + block]))))
    return math.fsum(sums) / (m * (m - 1) / 2)


def estimate_mean_edge(original: np.ndarray, cap: int = 5000, seed=0) -> float:
    """Background mean edge from the original matrix, the reference scale
    that splits attractive from repulsive graph edges.

    Uses all rows when the matrix is small enough, otherwise the mean
    pairwise distance of ``cap`` rows sampled uniformly without replacement.
    ``seed`` is any numpy Generator seed (int or sequence of ints).
    """
    original = as_feature_matrix(original)
    if original.shape[0] < 2:
        raise ValueError("mean edge needs at least 2 rows")
    if cap < 2:
        raise ValueError(f"cap must be >= 2, got {cap}")
    if original.shape[0] <= cap:
        return mean_pairwise_distance(original)
    rng = np.random.default_rng(seed)
    idx = rng.choice(original.shape[0], size=cap, replace=False)
    return mean_pairwise_distance(original[idx])
