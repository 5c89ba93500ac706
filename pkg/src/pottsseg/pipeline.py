"""End-to-end pipeline: reduce, build the graph, minimize, expand labels."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import PottsConfig
from .dataset import ReductionMap, as_feature_matrix, deduplicate, upsample_labels
from .downsample import DownsampleResult, downsample
from .graph import FeatureGraph, build_graph, estimate_mean_edge
from .potts import Solution, best_of_restarts, gamma_sweep

_MEAN_EDGE_STREAM = 17  # fixed tag deriving the sampling stream from cfg.seed


@dataclass(frozen=True)
class PipelineResult:
    labels: np.ndarray             # one label per original row
    solution: Solution
    graph: FeatureGraph
    reduction: ReductionMap        # original rows -> reduced nodes
    downsampled: DownsampleResult
    distinct_rows: int             # M'
    e_bar: float
    timings: dict
    gamma_table: list | None = None
    warnings: tuple = ()

    @property
    def n_segments(self) -> int:
        return self.solution.n_segments


def run_pipeline(matrix, cfg: PottsConfig, gamma_grid=None) -> PipelineResult:
    """Cluster the rows of a feature matrix.

    Stages: deduplicate rows, downsample toward cfg.target_nodes, estimate
    the background mean edge from the original matrix, build the complete
    graph, minimize with restarts (or across ``gamma_grid``, keeping the
    minimum-energy solution), then expand node labels back to all rows.
    """
    cfg.validate()
    matrix = as_feature_matrix(matrix)
    timings: dict[str, float] = {}
    warnings: list[str] = []

    t0 = time.perf_counter()
    distinct, dedup_map = deduplicate(matrix)
    timings["deduplicate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    ds = downsample(distinct, cfg)
    timings["downsample"] = time.perf_counter() - t0
    if not ds.converged and ds.iterations_used > 0:
        warnings.append(
            f"downsample stopped after {ds.iterations_used} iterations at "
            f"{ds.achieved} nodes (target {cfg.target_nodes})"
        )

    t0 = time.perf_counter()
    if matrix.shape[0] < 2:
        e_bar = 0.0  # a single data point has no pairs to average
    else:
        e_bar = estimate_mean_edge(
            matrix, cap=cfg.mean_edge_cap, seed=[cfg.seed, _MEAN_EDGE_STREAM]
        )
    timings["mean_edge"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    graph = build_graph(ds.reduced, e_bar)
    timings["build_graph"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    gamma_table = None
    if gamma_grid is not None:
        gamma_table, solution = gamma_sweep(graph, gamma_grid, cfg)
    else:
        solution = best_of_restarts(graph, cfg)
    timings["minimize"] = time.perf_counter() - t0
    if not solution.converged:
        warnings.append(f"minimization hit the sweep limit ({solution.sweeps_used} sweeps)")

    t0 = time.perf_counter()
    reduction = dedup_map.compose(ds.rmap)
    labels = upsample_labels(solution.labels, reduction)
    timings["upsample"] = time.perf_counter() - t0
    if labels.shape[0] != matrix.shape[0]:
        raise AssertionError("expanded labels do not cover every input row")

    return PipelineResult(
        labels=labels,
        solution=solution,
        graph=graph,
        reduction=reduction,
        downsampled=ds,
        distinct_rows=distinct.shape[0],
        e_bar=e_bar,
        timings=timings,
        gamma_table=gamma_table,
        warnings=tuple(warnings),
    )
