"""Variance-budgeted per-column quantization with PID-controlled row targeting.

The deduplicated matrix is shrunk toward a requested row count K by running
1-D k-means independently on each column, replacing every entry with its
cluster mean, and collapsing the rows that become identical. The per-column
cluster budgets start from a variance-proportional split and are then nudged
by a discrete PID controller until the achieved distinct-row count lands
near K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import PottsConfig
from .dataset import ReductionMap, as_feature_matrix, deduplicate


def round_half_up(x):
    """Round scalar or array half-up; the house rounding for budget updates."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


@dataclass
class PidState:
    """Gains plus the error history the integral and derivative terms read."""

    gains: tuple[float, float, float] = (0.5, 0.05, 0.15)
    errors: list[float] = field(default_factory=list)

    @property
    def iteration(self) -> int:
        return len(self.errors)


@dataclass(frozen=True)
class DownsampleResult:
    reduced: np.ndarray          # the quantized distinct rows (M'' of them)
    rmap: ReductionMap           # source rows -> reduced rows
    achieved: int                # M''
    iterations_used: int
    converged: bool = True
    trace: tuple = ()            # per-iteration (t, budget, achieved, error) records


def initial_budget(m: np.ndarray, target: int) -> np.ndarray:
    """Variance-proportional cluster budget per column.

    Column j gets round-half-up of (var_j / sum(var)) * K / prod(var)^(1/n),
    with n the number of columns that actually vary. Zero-variance columns
    get a budget of 1 and are excluded from both the normalization and the
    product. Budgets are requests: kmeans_1d caps them at the distinct-value
    count when a column cannot support that many clusters.
    """
    m = as_feature_matrix(m)
    if target < 1:
        raise ValueError(f"target must be >= 1, got {target}")
    var = m.var(axis=0, dtype=np.float64)
    live = var > 0
    budget = np.ones(m.shape[1], dtype=np.int64)
    if live.any():
        n_live = int(live.sum())
        weights = var[live] / var[live].sum()
        scale = target / float(np.prod(var[live])) ** (1.0 / n_live)
        budget[live] = np.maximum(1, round_half_up(weights * scale))
    return budget


def kmeans_1d(values, k: int, max_iter: int = 300) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm on scalars with deterministic quantile seeding.

    Centers start at the (i+1/2)/k quantiles and converge when the
    assignment stops changing. Requests for more clusters than distinct
    values are quietly reduced. Returns (centers, per-value center index).
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("values must be non-empty")
    uniq, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    if int(k) >= uniq.size:
        # one cluster per distinct value: zero SSE, nothing for Lloyd to do
        return uniq.copy(), inverse.astype(np.int64)
    k = max(1, int(k))
    centers = np.quantile(values, (np.arange(k) + 0.5) / k)
    weights = counts.astype(np.float64)
    assign_u = None
    for _ in range(max_iter):
        mids = (centers[:-1] + centers[1:]) / 2.0
        new_assign = np.searchsorted(mids, uniq)
        if assign_u is not None and np.array_equal(new_assign, assign_u):
            break
        assign_u = new_assign
        mass = np.bincount(assign_u, weights=weights, minlength=k)
        total = np.bincount(assign_u, weights=uniq * weights, minlength=k)
        occupied = mass > 0
        centers[occupied] = total[occupied] / mass[occupied]
        centers = np.sort(centers)
    return centers, assign_u[inverse]


def quantize_once(m: np.ndarray, budget) -> DownsampleResult:
    """One quantization pass: per-column k-means, entries -> rounded cluster means,
    then row deduplication of the result."""
    m = as_feature_matrix(m)
    budget = np.asarray(budget, dtype=np.int64)
    if budget.shape != (m.shape[1],) or (budget < 1).any():
        raise ValueError(f"budget must hold one positive count per column, got {budget}")
    q = np.empty_like(m)
    for j in range(m.shape[1]):
        centers, assign = kmeans_1d(m[:, j], int(budget[j]))
        q[:, j] = round_half_up(centers)[assign]
    reduced, rmap = deduplicate(q)
    return DownsampleResult(reduced, rmap, reduced.shape[0], iterations_used=0)


def pid_step(state: PidState, budget, achieved: int, target: int) -> np.ndarray:
    """Update every column budget from the current targeting error.

    error = 1 - achieved/K is appended to the state history; the new budget
    is round-half-up of k * (Kp*e + Ki*sum(e) + Kd*(e - e_prev) + 1), with
    missing history terms treated as zero. Budgets never drop below 1.
    """
    budget = np.asarray(budget, dtype=np.int64)
    kp, ki, kd = state.gains
    error = 1.0 - achieved / target
    state.errors.append(error)
    prev = state.errors[-2] if len(state.errors) >= 2 else 0.0
    multiplier = kp * error + ki * math.fsum(state.errors) + kd * (error - prev) + 1.0
    return np.maximum(1, round_half_up(budget * multiplier))


def downsample(m: np.ndarray, cfg: PottsConfig) -> DownsampleResult:
    """Drive the quantize/PID loop until the distinct-row count lands near K.

    Matrices already at or below ``cfg.dedup_threshold`` rows pass through
    untouched. Otherwise the loop runs until the achieved count falls in
    [alpha*K, ceil(K/alpha)] or ``max_pid_iters`` steps elapse, and returns
    the iterate closest to K among those achieving at least alpha*K (all
    iterates, if none got there; that case carries converged=False).
    """
    m = as_feature_matrix(m)
    cfg.validate()
    target = cfg.target_nodes
    if m.shape[0] <= cfg.dedup_threshold:
        return DownsampleResult(
            m, ReductionMap.identity(m.shape[0]), m.shape[0], iterations_used=0
        )

    lo = cfg.alpha * target
    hi = math.ceil(target / cfg.alpha)
    state = PidState(gains=cfg.pid_gains)
    budget = initial_budget(m, target)
    results: list[tuple[int, DownsampleResult]] = []
    trace: list[tuple] = []

    t = 0
    result = quantize_once(m, budget)
    results.append((t, result))
    trace.append((t, tuple(int(k) for k in budget), result.achieved, 0.0))
    while not (lo <= result.achieved <= hi) and t < cfg.max_pid_iters:
        t += 1
        budget = pid_step(state, budget, result.achieved, target)
        result = quantize_once(m, budget)
        results.append((t, result))
        trace.append((t, tuple(int(k) for k in budget), result.achieved, state.errors[-1]))

    on_target = [(i, r) for i, r in results if r.achieved >= lo]
    pool = on_target if on_target else results
    # closest to K; later iterates win ties
    _, best = min(pool, key=lambda ir: (abs(ir[1].achieved - target), -ir[0]))
    converged = lo <= results[-1][1].achieved <= hi
    return DownsampleResult(
        best.reduced,
        best.rmap,
        best.achieved,
        iterations_used=t,
        converged=converged,
        trace=tuple(trace),
    )
