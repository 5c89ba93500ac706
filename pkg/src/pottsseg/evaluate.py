"""Synthetic data generation, clustering metrics, and comparison baselines."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.spatial.distance import cdist

from .dataset import as_feature_matrix


@dataclass(frozen=True)
class GaussianCluster:
    mean: tuple
    variance: tuple   # per-dimension
    count: int


@dataclass(frozen=True)
class SyntheticSpec:
    """Mixture of axis-aligned Gaussians with integer-quantized samples."""

    clusters: tuple
    seed: int = 0

    @staticmethod
    def from_dict(d: dict) -> "SyntheticSpec":
        clusters = tuple(
            GaussianCluster(tuple(c["mean"]), tuple(c["variance"]), int(c["count"]))
            for c in d["clusters"]
        )
        return SyntheticSpec(clusters, int(d.get("seed", 0)))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "clusters": [
                {"mean": list(c.mean), "variance": list(c.variance), "count": c.count}
                for c in self.clusters
            ],
        }


def default_synthetic_spec(seed: int = 0, spread: float = 1.0) -> SyntheticSpec:
    """1000 points in four 3-D Gaussian classes with a small overlap.

    Class means sit near-equidistant (pairwise distance ~134), per-dimension
    deviations run 8 to 14, and class sizes are deliberately unequal.
    ``spread`` scales every variance; values above 1 blur the class
    boundaries for harder benchmark variants.
    """
    base = [
        ((60.0, 60.0, 60.0), (128.0, 72.0, 200.0), 400),
        ((155.0, 155.0, 60.0), (200.0, 128.0, 98.0), 300),
        ((155.0, 60.0, 155.0), (98.0, 200.0, 128.0), 200),
        ((60.0, 155.0, 155.0), (162.0, 98.0, 200.0), 100),
    ]
    clusters = tuple(
        GaussianCluster(mean, tuple(v * spread for v in var), count)
        for mean, var, count in base
    )
    return SyntheticSpec(clusters, seed)


def generate_synthetic(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sample the mixture, quantize to non-negative integers, return data + truth."""
    if not spec.clusters:
        raise ValueError("spec needs at least one cluster")
    dim = len(spec.clusters[0].mean)
    rng = np.random.default_rng(spec.seed)
    blocks = []
    labels = []
    for ci, c in enumerate(spec.clusters):
        if len(c.mean) != dim or len(c.variance) != dim:
            raise ValueError("all clusters must share one dimensionality")
        if c.count < 1:
            raise ValueError("cluster counts must be >= 1")
        if any(v < 0 for v in c.variance):
            raise ValueError("variances must be >= 0")
        pts = rng.normal(c.mean, np.sqrt(c.variance), size=(c.count, dim))
        blocks.append(np.maximum(np.floor(pts + 0.5), 0).astype(np.int64))
        labels.append(np.full(c.count, ci, dtype=np.int64))
    return np.vstack(blocks), np.concatenate(labels)


def shannon_entropy(labels) -> float:
    """Entropy of the label distribution in bits, with 0*log(0) = 0."""
    labels = np.asarray(labels).ravel()
    if labels.size == 0:
        raise ValueError("labels must be non-empty")
    _, counts = np.unique(labels, return_counts=True)
    p = counts / labels.size
    return float(-np.sum(p * np.log2(p)))


def contingency_table(a, b) -> np.ndarray:
    """Co-occurrence counts between two labelings of the same points."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    la, lb = ai.max() + 1, bi.max() + 1
    table = np.zeros((la, lb), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def nmi(c, g) -> float:
    """Normalized mutual information 2*I/(H_c + H_g) in [0, 1].

    Two constant labelings agree perfectly and score 1 even though both
    entropies vanish.
    """
    table = contingency_table(c, g)
    m = table.sum()
    h_c = shannon_entropy(c)
    h_g = shannon_entropy(g)
    if h_c == 0.0 and h_g == 0.0:
        return 1.0
    row = table.sum(axis=1, keepdims=True)
    col = table.sum(axis=0, keepdims=True)
    nz = table > 0
    ratio = (table * m) / (row * col)
    info = float(np.sum((table[nz] / m) * np.log2(ratio[nz])))
    return 2.0 * info / (h_c + h_g)


def kmeans_baseline(
    m: np.ndarray, k: int, seed: int = 0, max_iter: int = 300, return_sse: bool = False
):
    """Classical full-space Lloyd's with k-means++ style seeding.

    Comparison baseline only. Optionally returns the per-sweep SSE history
    alongside the labels.
    """
    m = as_feature_matrix(m)
    pts = m.astype(np.float64)
    n = pts.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)

    centers = np.empty((k, pts.shape[1]))
    centers[0] = pts[rng.integers(n)]
    closest_sq = ((pts - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = closest_sq.sum()
        if total == 0:
            centers[i] = pts[rng.integers(n)]
        else:
            centers[i] = pts[rng.choice(n, p=closest_sq / total)]
        closest_sq = np.minimum(closest_sq, ((pts - centers[i]) ** 2).sum(axis=1))

    labels = None
    sse_history = []
    for _ in range(max_iter):
        d2 = cdist(pts, centers, "sqeuclidean")
        new_labels = d2.argmin(axis=1)
        sse_history.append(float(d2[np.arange(n), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for i in range(k):
            mask = labels == i
            if mask.any():
                centers[i] = pts[mask].mean(axis=0)
            else:
                # revive an empty cluster at the worst-fit point
                centers[i] = pts[int(d2[np.arange(n), labels].argmax())]
    if return_sse:
        return labels.astype(np.int64), sse_history
    return labels.astype(np.int64)


_SSIM_C1 = (0.01 * 255.0) ** 2
_SSIM_C2 = (0.03 * 255.0) ** 2
_SSIM_WINDOW = 8


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Structural similarity with uniform 8x8 sliding windows.

    Channels are scored independently over all fully-interior windows and
    averaged. Inputs must share shape; values are treated on the 8-bit
    scale (the stabilizing constants assume a 255 dynamic range).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[:, :, None]
        b = b[:, :, None]
    h, wdt = a.shape[:2]
    win = _SSIM_WINDOW
    if h < win or wdt < win:
        raise ValueError(f"images must be at least {win}x{win}")

    def window_means(x):
        # size-`win` uniform filter, cropped to windows fully inside the image
        f = uniform_filter(x, size=win, axes=(0, 1))
        return f[win // 2 : h - (win - 1) + win // 2, win // 2 : wdt - (win - 1) + win // 2]

    scores = []
    for ch in range(a.shape[2]):
        x, y = a[:, :, ch], b[:, :, ch]
        mx, my = window_means(x), window_means(y)
        sxx = window_means(x * x) - mx * mx
        syy = window_means(y * y) - my * my
        sxy = window_means(x * y) - mx * my
        num = (2 * mx * my + _SSIM_C1) * (2 * sxy + _SSIM_C2)
        den = (mx * mx + my * my + _SSIM_C1) * (sxx + syy + _SSIM_C2)
        scores.append(float(np.mean(num / den)))
    return float(np.mean(scores))


def sweep_report(rows) -> str:
    """Render sweep results as a CSV table sorted by (gamma, nodes, seed).

    Each row needs gamma, nodes, seed, nmi, segments, energy, seconds.
    """
    header = "gamma,nodes,seed,nmi,segments,energy,seconds"
    ordered = sorted(rows, key=lambda r: (r["gamma"], r["nodes"], r["seed"]))
    out = io.StringIO()
    out.write(header + "\n")
    for r in ordered:
        out.write(
            f"{r['gamma']:.6g},{r['nodes']},{r['seed']},{r['nmi']:.6f},"
            f"{r['segments']},{r['energy']:.9g},{r['seconds']:.6f}\n"
        )
    return out.getvalue()
