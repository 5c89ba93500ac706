"""Pipeline configuration shared across the downsampling, graph, and solver stages."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class PottsConfig:
    """All tunables for the segmentation pipeline.

    Defaults follow the operating point used throughout the pipeline's
    reference experiments: a node budget of 350, a 95% targeting window,
    PID gains (0.5, 0.05, 0.15), and a 5000-row cap for the mean-edge
    estimate.
    """

    gamma: float = 1.0                 # resolution: scales repulsive edge terms
    target_nodes: int = 350            # K, requested reduced-graph size
    alpha: float = 0.95                # accept achieved node counts >= alpha*K
    pid_gains: tuple[float, float, float] = (0.5, 0.05, 0.15)
    dedup_threshold: int = 500         # skip downsampling when M' is already this small
    max_pid_iters: int = 50
    mean_edge_cap: int = 5000          # max rows sampled for the mean-edge estimate
    restarts: int = 5
    initial_segments: Optional[int] = None  # None: ceil(M''/10) at solve time
    max_sweeps: int = 100
    move_tolerance: float = 1e-12      # minimum |dH| for a move to count as improving
    seed: int = 0

    def validate(self) -> None:
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.target_nodes < 1:
            raise ValueError(f"target_nodes must be >= 1, got {self.target_nodes}")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.dedup_threshold < 0:
            raise ValueError("dedup_threshold must be >= 0")
        if self.max_pid_iters < 0:
            raise ValueError("max_pid_iters must be >= 0")
        if self.mean_edge_cap < 2:
            raise ValueError(f"mean_edge_cap must be >= 2, got {self.mean_edge_cap}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.initial_segments is not None and self.initial_segments < 1:
            raise ValueError("initial_segments must be >= 1 when given")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.move_tolerance < 0:
            raise ValueError("move_tolerance must be >= 0")

    def with_seed(self, seed: int) -> "PottsConfig":
        return replace(self, seed=int(seed))
