"""Shared test helpers: direct graph construction, brute-force oracles, trace replay."""

import numpy as np

from pottsseg.graph import FeatureGraph
from pottsseg.potts import weight_matrix


def graph_from_edges(edges, e_bar, features=None) -> FeatureGraph:
    """Build a FeatureGraph straight from an edge matrix (tests only)."""
    edges = np.asarray(edges, dtype=np.float64)
    if features is None:
        features = np.zeros((edges.shape[0], 1), dtype=np.int64)
    return FeatureGraph(np.asarray(features), edges, float(e_bar))


def random_edge_graph(rng, n, low=0.0, high=1.0) -> FeatureGraph:
    """Symmetric uniform-random edge weights with e_bar set to their mean."""
    w = rng.uniform(low, high, size=(n, n))
    edges = np.triu(w, 1)
    edges = edges + edges.T
    tri = edges[np.triu_indices(n, 1)]
    return graph_from_edges(edges, tri.mean())


def oracle_energy(graph: FeatureGraph, labels, gamma: float) -> float:
    """Independent Hamiltonian: plain double loop over the edge-weight formula."""
    labels = np.asarray(labels)
    e = graph.edges
    e_bar = graph.e_bar
    total = 0.0
    n = e.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i] != labels[j]:
                continue
            d = e[i, j]
            if d < e_bar:
                total += d - e_bar
            elif d > e_bar:
                total += gamma * (d - e_bar)
    return total


def set_partitions(n):
    """All partitions of range(n) as canonical label vectors (restricted growth)."""

    def rec(prefix, n_used):
        i = len(prefix)
        if i == n:
            yield tuple(prefix)
            return
        for lab in range(n_used + 1):
            prefix.append(lab)
            yield from rec(prefix, max(n_used, lab + 1))
            prefix.pop()

    yield from rec([], 0)


def brute_force_minimum(graph: FeatureGraph, gamma: float):
    """Exhaustive minimum energy over every set partition."""
    best_energy = np.inf
    best_labels = None
    for labels in set_partitions(graph.n_nodes):
        h = oracle_energy(graph, labels, gamma)
        if h < best_energy:
            best_energy = h
            best_labels = labels
    return best_energy, best_labels


def replay_trace(graph: FeatureGraph, gamma: float, trace):
    """Recompute the energy from scratch around every accepted move.

    Returns a list of (energy_before, energy_after, reported_delta).
    """
    w = weight_matrix(graph, gamma)

    def energy(assign):
        same = assign[:, None] == assign[None, :]
        return float(np.sum(w * same) * 0.5)

    by_sweep: dict[int, list] = {}
    for sweep, node, new_label, delta in trace.moves:
        by_sweep.setdefault(sweep, []).append((node, new_label, delta))

    steps = []
    for sweep, snap in enumerate(trace.snapshots):
        assign = snap.copy()
        h = energy(assign)
        for node, new_label, delta in by_sweep.get(sweep, ()):
            assign[node] = new_label
            h_new = energy(assign)
            steps.append((h, h_new, delta))
            h = h_new
    return steps
