import numpy as np
import pytest
from _util import (
    brute_force_minimum,
    graph_from_edges,
    oracle_energy,
    random_edge_graph,
    replay_trace,
)

from pottsseg.config import PottsConfig
from pottsseg.graph import build_graph
from pottsseg.potts import (
    NEW_SEGMENT,
    MoveTrace,
    best_of_restarts,
    edge_weight,
    gamma_sweep,
    hamiltonian,
    minimize,
    move_delta,
)


def three_node_graph():
    # e12=1, e13=2, e23=3 with mean 2: one attractive edge, one neutral, one repulsive
    edges = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])
    return graph_from_edges(edges, e_bar=2.0)


# ---------------------------------------------------------------------------
# edge_weight / hamiltonian
# ---------------------------------------------------------------------------

def test_edge_weight_branches():
    assert edge_weight(1.0, 2.0, 0.5) == -1.0
    assert edge_weight(3.0, 2.0, 0.5) == 0.5
    assert edge_weight(2.0, 2.0, 0.5) == 0.0
    assert edge_weight(2.0, 2.0, 100.0) == 0.0


def test_hamiltonian_singletons_zero():
    g = three_node_graph()
    assert hamiltonian(np.array([0, 1, 2]), g, 0.5) == 0.0


def test_hamiltonian_all_in_one():
    g = three_node_graph()
    assert hamiltonian(np.array([0, 0, 0]), g, 0.5) == pytest.approx(-0.5)


def test_hamiltonian_best_partition_is_global_minimum():
    g = three_node_graph()
    assert hamiltonian(np.array([0, 0, 1]), g, 0.5) == pytest.approx(-1.0)
    best, labels = brute_force_minimum(g, 0.5)
    assert best == pytest.approx(-1.0)
    assert labels == (0, 0, 1)


def test_hamiltonian_matches_oracle_on_random_graphs():
    rng = np.random.default_rng(0)
    for _ in range(25):
        g = random_edge_graph(rng, rng.integers(2, 9))
        labels = rng.integers(0, 3, g.n_nodes)
        gamma = float(rng.uniform(0.1, 3.0))
        assert hamiltonian(labels, g, gamma) == pytest.approx(
            oracle_energy(g, labels, gamma), abs=1e-12
        )


def test_hamiltonian_label_permutation_invariant():
    rng = np.random.default_rng(1)
    g = random_edge_graph(rng, 10)
    labels = rng.integers(0, 4, 10)
    perm = rng.permutation(labels.max() + 1)
    assert hamiltonian(perm[labels], g, 0.7) == pytest.approx(hamiltonian(labels, g, 0.7))


def test_hamiltonian_nondecreasing_in_gamma_for_fixed_partition():
    rng = np.random.default_rng(2)
    g = random_edge_graph(rng, 12)
    labels = rng.integers(0, 3, 12)
    values = [hamiltonian(labels, g, gamma) for gamma in (0.01, 0.1, 0.5, 1.0, 2.0, 10.0)]
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# move_delta
# ---------------------------------------------------------------------------

def test_move_delta_singleton_to_new_is_zero():
    g = three_node_graph()
    assert move_delta(2, NEW_SEGMENT, np.array([0, 0, 1]), g, 0.5) == 0.0


def test_move_delta_worked_example():
    g = three_node_graph()
    # all in one segment; node 2 leaves w13 + w23 = 0 + 0.5 behind
    assert move_delta(2, NEW_SEGMENT, np.array([0, 0, 0]), g, 0.5) == pytest.approx(-0.5)


def test_move_delta_rejects_current_segment():
    g = three_node_graph()
    with pytest.raises(ValueError):
        move_delta(0, 0, np.array([0, 0, 1]), g, 0.5)
    with pytest.raises(ValueError):
        move_delta(0, 7, np.array([0, 0, 1]), g, 0.5)


def test_move_delta_matches_recomputation_exhaustively():
    rng = np.random.default_rng(3)
    for _ in range(10):
        g = random_edge_graph(rng, 6)
        labels = rng.integers(0, 3, 6)
        gamma = float(rng.uniform(0.1, 2.0))
        h0 = hamiltonian(labels, g, gamma)
        for node in range(6):
            targets = [t for t in np.unique(labels) if t != labels[node]] + [NEW_SEGMENT]
            for target in targets:
                after = labels.copy()
                after[node] = labels.max() + 1 if target is NEW_SEGMENT else target
                expected = hamiltonian(after, g, gamma) - h0
                got = move_delta(node, target, labels, g, gamma)
                assert got == pytest.approx(expected, abs=1e-9)


# ---------------------------------------------------------------------------
# minimize
# ---------------------------------------------------------------------------

def test_minimize_all_repulsive_goes_to_singletons():
    rng = np.random.default_rng(4)
    pts = rng.integers(0, 256, (20, 3))
    g = build_graph(pts, e_bar=0.0)  # every edge exceeds the mean
    sol = minimize(g, PottsConfig(gamma=1.0, initial_segments=3, seed=1))
    assert sol.n_segments == 20
    assert sol.energy == 0.0
    assert sol.converged


def test_minimize_reaches_global_optimum_from_every_start():
    g = three_node_graph()
    cfg = PottsConfig(gamma=0.5, seed=0)
    for a in range(3):
        for b in range(3):
            for c in range(3):
                sol = minimize(g, cfg, initial_labels=np.array([a, b, c]))
                assert sol.energy == pytest.approx(-1.0)
                labs = sol.labels
                assert labs[0] == labs[1] != labs[2]
                assert sol.converged


def test_minimize_single_node():
    g = build_graph(np.array([[5, 5, 5]]), e_bar=1.0)
    sol = minimize(g, PottsConfig(seed=0))
    assert sol.n_segments == 1
    assert sol.energy == 0.0


def test_minimize_zero_weight_graph_makes_no_moves():
    edges = np.full((6, 6), 3.0)
    np.fill_diagonal(edges, 0.0)
    g = graph_from_edges(edges, e_bar=3.0)  # every weight is exactly zero
    trace = MoveTrace()
    sol = minimize(g, PottsConfig(gamma=1.0, initial_segments=2, seed=5), trace=trace)
    assert sol.energy == 0.0
    assert not trace.moves
    assert sol.sweeps_used == 2  # two empty sweeps confirm convergence


def test_minimize_labels_compact_and_energy_consistent():
    rng = np.random.default_rng(6)
    g = random_edge_graph(rng, 30)
    sol = minimize(g, PottsConfig(gamma=0.8, seed=7))
    labs = sol.labels
    assert set(labs.tolist()) == set(range(labs.max() + 1))
    assert sol.energy == pytest.approx(hamiltonian(labs, g, 0.8), rel=1e-9, abs=1e-9)


def test_minimize_energy_decreases_at_every_accepted_move():
    rng = np.random.default_rng(8)
    g = random_edge_graph(rng, 25)
    cfg = PottsConfig(gamma=0.6, seed=9)
    trace = MoveTrace()
    sol = minimize(g, cfg, trace=trace)
    steps = replay_trace(g, 0.6, trace)
    assert len(steps) > 0
    for before, after, delta in steps:
        assert after < before
        assert after - before == pytest.approx(delta, abs=1e-9)
    # the trace ends where the solution ends
    assert steps[-1][1] == pytest.approx(sol.energy, abs=1e-9)


def test_minimize_exact_sweeps_runs_fixed_count():
    rng = np.random.default_rng(10)
    g = random_edge_graph(rng, 15)
    sol = minimize(g, PottsConfig(seed=11), exact_sweeps=4)
    assert sol.sweeps_used == 4


def test_minimize_deterministic_per_seed():
    rng = np.random.default_rng(12)
    g = random_edge_graph(rng, 20)
    cfg = PottsConfig(gamma=0.5, seed=13)
    a = minimize(g, cfg)
    b = minimize(g, cfg)
    assert np.array_equal(a.labels, b.labels)
    assert a.energy == b.energy


def test_minimize_max_sweeps_flags_non_convergence():
    rng = np.random.default_rng(14)
    g = random_edge_graph(rng, 25)
    sol = minimize(g, PottsConfig(gamma=0.7, seed=15, max_sweeps=1))
    assert sol.sweeps_used == 1
    assert not sol.converged


# ---------------------------------------------------------------------------
# best_of_restarts / gamma_sweep
# ---------------------------------------------------------------------------

def test_single_restart_is_plain_minimize():
    rng = np.random.default_rng(16)
    g = random_edge_graph(rng, 15)
    cfg = PottsConfig(gamma=0.5, restarts=1, seed=17)
    a = best_of_restarts(g, cfg)
    b = minimize(g, cfg)
    assert np.array_equal(a.labels, b.labels)
    assert a.energy == b.energy


def test_best_of_restarts_three_node_optimum():
    sol = best_of_restarts(three_node_graph(), PottsConfig(gamma=0.5, restarts=5, seed=0))
    assert sol.energy == pytest.approx(-1.0)


def test_best_of_restarts_never_worse_than_single():
    rng = np.random.default_rng(18)
    g = random_edge_graph(rng, 20)
    cfg = PottsConfig(gamma=0.9, restarts=8, seed=19)
    multi = best_of_restarts(g, cfg)
    single = minimize(g, cfg)
    assert multi.energy <= single.energy + 1e-12


def test_best_of_restarts_deterministic():
    rng = np.random.default_rng(20)
    g = random_edge_graph(rng, 18)
    cfg = PottsConfig(gamma=0.5, restarts=4, seed=21)
    a = best_of_restarts(g, cfg)
    b = best_of_restarts(g, cfg)
    assert np.array_equal(a.labels, b.labels)
    assert (a.energy, a.sweeps_used) == (b.energy, b.sweeps_used)


def test_gamma_sweep_single_value():
    g = three_node_graph()
    cfg = PottsConfig(restarts=2, seed=1)
    rows, selected = gamma_sweep(g, [0.5], cfg)
    assert len(rows) == 1
    assert rows[0]["gamma"] == 0.5
    assert selected.energy == pytest.approx(rows[0]["energy"])


def test_gamma_sweep_selects_minimum_energy():
    rng = np.random.default_rng(22)
    g = random_edge_graph(rng, 20)
    cfg = PottsConfig(restarts=3, seed=23)
    rows, selected = gamma_sweep(g, [0.05, 0.5, 2.0], cfg)
    assert selected.energy == min(r["energy"] for r in rows)
    assert [r["gamma"] for r in rows] == [0.05, 0.5, 2.0]
    for r in rows:
        assert r["seconds"] >= 0.0
        assert r["segments"] >= 1


def test_gamma_sweep_segment_count_trend():
    # more resolution -> at least as many segments, comparing the extremes
    rng = np.random.default_rng(24)
    pts = np.vstack([rng.normal(c, 6, (40, 3)) for c in ((40, 40, 40), (160, 160, 160))])
    g = build_graph(np.maximum(pts.round(), 0).astype(np.int64), e_bar=80.0)
    cfg = PottsConfig(restarts=3, seed=25)
    rows, _ = gamma_sweep(g, [0.01, 5.0], cfg)
    assert rows[0]["segments"] <= rows[1]["segments"]


def test_fixed_sweep_time_tracks_edge_count():
    # median minimize time over fixed sweeps should fit c*(n^2 - n) to
    # within a factor of 2 across n in {150, 300, 600}
    import time as _time

    from pottsseg.graph import build_graph as _build

    def run_once(n, seed):
        rng = np.random.default_rng(seed)
        pts = rng.integers(0, 256, (n, 3))
        g = _build(pts, e_bar=150.0)
        t0 = _time.perf_counter()
        minimize(g, PottsConfig(gamma=0.5, seed=seed, initial_segments=n // 10), exact_sweeps=5)
        return _time.perf_counter() - t0

    run_once(50, 0)  # jit warm-up
    coeffs = []
    for n in (150, 300, 600):
        median = sorted(run_once(n, s) for s in range(7))[3]
        coeffs.append(median / (n * n - n))
    assert max(coeffs) / min(coeffs) < 2.0


def test_gamma_sweep_rejects_bad_grid():
    g = three_node_graph()
    with pytest.raises(ValueError):
        gamma_sweep(g, [], PottsConfig())
    with pytest.raises(ValueError):
        gamma_sweep(g, [0.5, -1.0], PottsConfig())
