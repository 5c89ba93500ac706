"""Command-line interface: segment, cluster, synth, sweep, eval."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import PottsConfig
from .dataset import (
    image_to_matrix,
    load_csv_matrix,
    load_image,
    load_labels_csv,
    save_label_png,
    save_labels_csv,
)
from .evaluate import (
    SyntheticSpec,
    default_synthetic_spec,
    generate_synthetic,
    nmi,
    shannon_entropy,
    sweep_report,
)
from .pipeline import run_pipeline
from .potts import InternalInvariantError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we reserve that for I/O
        raise UsageError(message)


def _parse_grid(spec: str, *, integer: bool = False):
    """Parse 'start:stop:step' into an inclusive grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must look like start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"non-numeric grid component in {spec!r}")
    if step <= 0 or start > stop:
        raise UsageError(f"grid needs step > 0 and start <= stop, got {spec!r}")
    values = np.arange(start, stop + step * 0.5, step)
    if integer:
        return [int(round(v)) for v in values]
    return [float(v) for v in values]


def _parse_gains(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--pid-gains needs three comma-separated numbers, got {text!r}")
    try:
        p, i, d = (float(x) for x in parts)
    except ValueError:
        raise UsageError(f"non-numeric PID gain in {text!r}")
    return (p, i, d)


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, default=1.0, help="resolution parameter (default 1.0)")
    p.add_argument("--gamma-grid", metavar="START:STOP:STEP",
                   help="solve over a resolution grid and keep the minimum-energy solution")
    p.add_argument("--target-nodes", type=int, default=350, help="requested graph size K (default 350)")
    p.add_argument("--alpha", type=float, default=0.95,
                   help="accept node counts of at least alpha*K (default 0.95)")
    p.add_argument("--pid-gains", default="0.5,0.05,0.15", metavar="P,I,D",
                   help="PID gains for node-count targeting (default 0.5,0.05,0.15)")
    p.add_argument("--dedup-threshold", type=int, default=500,
                   help="skip downsampling when distinct rows <= this (default 500)")
    p.add_argument("--max-pid-iters", type=int, default=50)
    p.add_argument("--mean-edge-cap", type=int, default=5000,
                   help="max rows sampled for the mean-edge estimate (default 5000)")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--initial-segments", type=int, default=None)
    p.add_argument("--max-sweeps", type=int, default=100)
    p.add_argument("--dump-graph", action="store_true", help="write graph edges to graph.csv")


def _add_common_flags(p: argparse.ArgumentParser, seed_default=0) -> None:
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--threads", type=int, default=1, help="worker process cap (sweep only)")
    p.add_argument("--output-dir", "-o", default=".", help="where to write outputs (default .)")
    p.add_argument("--trace", action="store_true", help="write per-stage trace CSVs")


def _config_from_args(args) -> PottsConfig:
    cfg = PottsConfig(
        gamma=args.gamma,
        target_nodes=args.target_nodes,
        alpha=args.alpha,
        pid_gains=_parse_gains(args.pid_gains),
        dedup_threshold=args.dedup_threshold,
        max_pid_iters=args.max_pid_iters,
        mean_edge_cap=args.mean_edge_cap,
        restarts=args.restarts,
        initial_segments=args.initial_segments,
        max_sweeps=args.max_sweeps,
        seed=args.seed,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc))
    return cfg


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_downsample_trace(path: Path, ds) -> None:
    if not ds.trace:
        path.write_text("t,achieved,error\n", encoding="utf-8")
        return
    n_cols = len(ds.trace[0][1])
    header = "t," + ",".join(f"k{j + 1}" for j in range(n_cols)) + ",achieved,error"
    lines = [header]
    for t, budget, achieved, error in ds.trace:
        lines.append(f"{t}," + ",".join(str(k) for k in budget) + f",{achieved},{error:.9g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_graph_csv(path: Path, graph) -> None:
    n = graph.n_nodes
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i,j,e_ij\n")
        for i in range(n):
            for j in range(i + 1, n):
                fh.write(f"{i},{j},{graph.edges[i, j]:.9g}\n")


def _run_matrix_pipeline(matrix, cfg, args, outdir: Path, command: str, input_path, extra_stats=None):
    gamma_grid = _parse_grid(args.gamma_grid) if args.gamma_grid else None
    if gamma_grid is not None and any(g <= 0 for g in gamma_grid):
        raise UsageError("--gamma-grid values must be positive")

    start = time.perf_counter()
    result = run_pipeline(matrix, cfg, gamma_grid=gamma_grid)
    total = time.perf_counter() - start

    outputs: dict[str, str] = {}
    labels_csv = outdir / "labels.csv"
    save_labels_csv(labels_csv, result.labels)
    outputs["labels_csv"] = str(labels_csv)

    solution_json = outdir / "solution.json"
    _write_json(
        solution_json,
        {
            "gamma": result.solution.gamma,
            "energy": result.solution.energy,
            "segments": result.n_segments,
            "sweeps": result.solution.sweeps_used,
            "labels_path": str(labels_csv),
        },
    )
    outputs["solution_json"] = str(solution_json)

    if args.trace:
        trace_csv = outdir / "downsample_trace.csv"
        _write_downsample_trace(trace_csv, result.downsampled)
        outputs["downsample_trace_csv"] = str(trace_csv)
    if args.dump_graph:
        graph_csv = outdir / "graph.csv"
        _write_graph_csv(graph_csv, result.graph)
        outputs["graph_csv"] = str(graph_csv)

    m_nodes = result.graph.n_nodes
    resolved_initial = cfg.initial_segments
    if resolved_initial is None:
        resolved_initial = -(-m_nodes // 10)  # ceil(M''/10), the solver default
    manifest = {
        "tool": "pottsseg",
        "version": __version__,
        "numpy_version": np.__version__,
        "command": command,
        "input": str(input_path) if input_path is not None else None,
        "input_sha256": _sha256(Path(input_path)) if input_path is not None else None,
        "config": {
            "gamma": cfg.gamma,
            "gamma_grid": gamma_grid,
            "target_nodes": cfg.target_nodes,
            "alpha": cfg.alpha,
            "pid_gains": list(cfg.pid_gains),
            "dedup_threshold": cfg.dedup_threshold,
            "max_pid_iters": cfg.max_pid_iters,
            "mean_edge_cap": cfg.mean_edge_cap,
            "restarts": cfg.restarts,
            "initial_segments": cfg.initial_segments,
            "initial_segments_resolved": resolved_initial,
            "max_sweeps": cfg.max_sweeps,
            "move_tolerance": cfg.move_tolerance,
            "seed": cfg.seed,
            "threads": args.threads,
        },
        "stats": {
            "rows": int(matrix.shape[0]),
            "columns": int(matrix.shape[1]),
            "distinct_rows": result.distinct_rows,
            "nodes": m_nodes,
            "edges": result.graph.edge_count,
            "mean_edge": result.e_bar,
            "energy": result.solution.energy,
            "segments": result.n_segments,
            "sweeps": result.solution.sweeps_used,
            "solver_converged": result.solution.converged,
            "downsample_iterations": result.downsampled.iterations_used,
            "downsample_converged": result.downsampled.converged,
            **(extra_stats or {}),
        },
        "timings": {**result.timings, "total": total},
        "gamma_table": result.gamma_table,
        "outputs": outputs,
        "warnings": list(result.warnings),
    }
    return result, manifest, outputs


def cmd_segment(args) -> int:
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = _config_from_args(args)
    image = load_image(args.input)
    height, width = image.shape[:2]
    matrix = image_to_matrix(image)

    result, manifest, outputs = _run_matrix_pipeline(
        matrix, cfg, args, outdir, "segment", args.input,
        extra_stats={"height": height, "width": width},
    )

    label_png = outdir / "labels.png"
    save_label_png(label_png, result.labels, height, width)
    outputs["labels_png"] = str(label_png)
    manifest["outputs"] = outputs
    manifest_path = outdir / "manifest.json"
    _write_json(manifest_path, manifest)

    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"segments: {result.n_segments}")
    print(f"energy: {result.solution.energy:.9g}")
    print(f"outputs: {outdir}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = _config_from_args(args)
    matrix = load_csv_matrix(args.input, quantize_levels=args.quantize_levels)

    result, manifest, outputs = _run_matrix_pipeline(
        matrix, cfg, args, outdir, "cluster", args.input,
        extra_stats={"quantize_levels": args.quantize_levels},
    )
    manifest_path = outdir / "manifest.json"
    _write_json(manifest_path, manifest)

    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"segments: {result.n_segments}")
    print(f"energy: {result.solution.energy:.9g}")
    print(f"outputs: {outdir}")
    return EXIT_OK


def _load_spec(args) -> SyntheticSpec:
    if args.spec:
        try:
            payload = json.loads(Path(args.spec).read_text(encoding="utf-8"))
            spec = SyntheticSpec.from_dict(payload)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{args.spec}: malformed synthetic spec: {exc}")
    else:
        spec = default_synthetic_spec()
    return replace(spec, seed=args.seed) if args.seed is not None else spec


def cmd_synth(args) -> int:
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    spec = _load_spec(args)
    data, truth = generate_synthetic(spec)

    data_csv = outdir / "data.csv"
    np.savetxt(data_csv, data, fmt="%d", delimiter=",")
    truth_csv = outdir / "truth.csv"
    save_labels_csv(truth_csv, truth)
    _write_json(
        outdir / "manifest.json",
        {
            "tool": "pottsseg",
            "version": __version__,
            "command": "synth",
            "spec": spec.to_dict(),
            "stats": {"rows": int(data.shape[0]), "columns": int(data.shape[1]),
                      "classes": int(truth.max()) + 1},
            "outputs": {"data_csv": str(data_csv), "truth_csv": str(truth_csv)},
        },
    )
    print(f"wrote {data.shape[0]} points to {data_csv}")
    print(f"wrote ground truth to {truth_csv}")
    return EXIT_OK


def cmd_eval(args) -> int:
    a = load_labels_csv(args.labels_a)
    b = load_labels_csv(args.labels_b)
    score = nmi(a, b)
    print(f"NMI: {score:.6f}")
    print(f"entropy_a: {shannon_entropy(a):.6f}")
    print(f"entropy_b: {shannon_entropy(b):.6f}")
    return EXIT_OK


def _sweep_block(payload) -> list[dict]:
    """One (seed, nodes) cell block of a sweep grid: all gammas on one graph."""
    spec_dict, seed, nodes, gammas, cfg_kwargs = payload
    spec = replace(SyntheticSpec.from_dict(spec_dict), seed=seed)
    data, truth = generate_synthetic(spec)
    rows = []
    base = PottsConfig(**cfg_kwargs)
    for gi, gamma in enumerate(gammas):
        cell_seed = int(np.random.SeedSequence([cfg_kwargs["seed"], seed, nodes, gi]).generate_state(1)[0])
        cfg = replace(base, gamma=gamma, target_nodes=nodes, seed=cell_seed)
        start = time.perf_counter()
        result = run_pipeline(data, cfg)
        elapsed = time.perf_counter() - start
        rows.append(
            {
                "gamma": gamma,
                "nodes": nodes,
                "seed": seed,
                "nmi": nmi(result.labels, truth),
                "segments": result.n_segments,
                "energy": result.solution.energy,
                "seconds": elapsed,
            }
        )
    return rows


def cmd_sweep(args) -> int:
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    gammas = _parse_grid(args.gamma_grid)
    if any(g <= 0 for g in gammas):
        raise UsageError("--gamma-grid values must be positive")
    nodes_grid = _parse_grid(args.nodes_grid, integer=True)
    if any(n < 1 for n in nodes_grid):
        raise UsageError("--nodes-grid values must be >= 1")
    if args.num_seeds < 1:
        raise UsageError("--seeds must be >= 1")

    spec = _load_spec(args)
    cfg = _config_from_args(args)
    cfg_kwargs = {
        "alpha": cfg.alpha,
        "pid_gains": cfg.pid_gains,
        "dedup_threshold": cfg.dedup_threshold,
        "max_pid_iters": cfg.max_pid_iters,
        "mean_edge_cap": cfg.mean_edge_cap,
        "restarts": cfg.restarts,
        "initial_segments": cfg.initial_segments,
        "max_sweeps": cfg.max_sweeps,
        "seed": cfg.seed,
    }
    blocks = [
        (spec.to_dict(), spec.seed + si, nodes, gammas, cfg_kwargs)
        for si in range(args.num_seeds)
        for nodes in nodes_grid
    ]

    rows: list[dict] = []
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            for block_rows in pool.map(_sweep_block, blocks):
                rows.extend(block_rows)
    else:
        for payload in blocks:
            rows.extend(_sweep_block(payload))

    report = sweep_report(rows)
    sweep_csv = outdir / "sweep.csv"
    sweep_csv.write_text(report, encoding="utf-8")
    print(f"wrote {len(rows)} rows to {sweep_csv}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="pottsseg", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pottsseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_seg = sub.add_parser("segment", help="segment an RGB image (PNG or binary PPM)")
    p_seg.add_argument("input", help="path to the image")
    _add_pipeline_flags(p_seg)
    _add_common_flags(p_seg)
    p_seg.set_defaults(func=cmd_segment)

    p_clu = sub.add_parser("cluster", help="cluster rows of a headerless numeric CSV")
    p_clu.add_argument("input", help="path to the CSV")
    p_clu.add_argument("--quantize-levels", type=int, default=0,
                       help="affinely quantize each column to this many levels first (0 = off)")
    _add_pipeline_flags(p_clu)
    _add_common_flags(p_clu)
    p_clu.set_defaults(func=cmd_cluster)

    p_syn = sub.add_parser("synth", help="generate labeled synthetic Gaussian data")
    p_syn.add_argument("--spec", help="JSON spec {seed, clusters:[{mean, variance, count}]}")
    _add_common_flags(p_syn, seed_default=None)  # None: keep the spec's own seed
    p_syn.set_defaults(func=cmd_synth)

    p_ev = sub.add_parser("eval", help="score two label CSVs against each other")
    p_ev.add_argument("labels_a")
    p_ev.add_argument("labels_b")
    p_ev.set_defaults(func=cmd_eval)

    p_sw = sub.add_parser("sweep", help="NMI sweep over a (gamma, nodes, seed) grid")
    p_sw.add_argument("--spec", help="synthetic data spec JSON (default: built-in 4-Gaussian spec)")
    p_sw.add_argument("--gamma-grid", default="0.0025:0.5:0.0025", metavar="START:STOP:STEP")
    p_sw.add_argument("--nodes-grid", default="100:600:20", metavar="START:STOP:STEP")
    p_sw.add_argument("--seeds", dest="num_seeds", type=int, default=1,
                      help="number of data realizations")
    p_sw.add_argument("--alpha", type=float, default=0.95)
    p_sw.add_argument("--pid-gains", default="0.5,0.05,0.15", metavar="P,I,D")
    p_sw.add_argument("--dedup-threshold", type=int, default=500)
    p_sw.add_argument("--max-pid-iters", type=int, default=50)
    p_sw.add_argument("--mean-edge-cap", type=int, default=5000)
    p_sw.add_argument("--restarts", type=int, default=5)
    p_sw.add_argument("--initial-segments", type=int, default=None)
    p_sw.add_argument("--max-sweeps", type=int, default=100)
    _add_common_flags(p_sw)
    p_sw.set_defaults(func=cmd_sweep, gamma=1.0, target_nodes=350)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InternalInvariantError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
