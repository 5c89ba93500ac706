"""Feature-matrix ingestion, row deduplication, and label up-sampling.

A feature matrix is a 2-D array of non-negative integers: one row per data
point (pixel), one column per feature (color channel). Rows are
fingerprinted with an iterated Cantor pairing so duplicate rows collapse to
a single graph node, and the surjective index maps recorded along the way
let segment labels computed on the reduced rows be expanded back to the
original rows exactly.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

import numpy as np
from PIL import Image

_U64_MAX = np.iinfo(np.uint64).max


def _largest_safe_pair_sum() -> int:
    # Largest s such that s*(s+1)//2 + s still fits in uint64; the second
    # pairing argument never exceeds s, so this bounds the whole fold step.
    lo, hi = 0, 1 << 33
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid * (mid + 1) // 2 + mid <= int(_U64_MAX):
            lo = mid
        else:
            hi = mid - 1
    return lo


_PAIR_SUM_MAX = _largest_safe_pair_sum()


def as_feature_matrix(values) -> np.ndarray:
    """Validate and return a feature matrix as a 2-D int64 array.

    Requires at least one row and one column, an integer dtype, and
    non-negative entries (Cantor pairing is defined on naturals only).
    """
    m = np.asarray(values)
    if m.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"feature matrix must be non-empty, got shape {m.shape}")
    if not np.issubdtype(m.dtype, np.integer):
        raise ValueError(f"feature matrix entries must be integers, got dtype {m.dtype}")
    if m.min() < 0:
        raise ValueError("feature matrix entries must be non-negative")
    return m.astype(np.int64, copy=False)


@dataclass(frozen=True)
class ReductionMap:
    """Surjective map from source-row indices to reduced-row indices.

    ``forward[i]`` is the reduced row that represents source row ``i``.
    Maps compose, so the pixel -> distinct-color -> quantized-color chain
    collapses to a single lookup when labels are expanded back.
    """

    forward: np.ndarray
    reduced_count: int

    def __post_init__(self):
        fwd = np.asarray(self.forward, dtype=np.int64)
        object.__setattr__(self, "forward", fwd)
        if fwd.ndim != 1 or fwd.size == 0:
            raise ValueError("forward map must be a non-empty 1-D array")
        if self.reduced_count < 1:
            raise ValueError("reduced_count must be >= 1")
        if fwd.min() < 0 or fwd.max() >= self.reduced_count:
            raise ValueError("forward values must lie in [0, reduced_count)")
        hit = np.zeros(self.reduced_count, dtype=bool)
        hit[fwd] = True
        if not hit.all():
            raise ValueError("map is not surjective: some reduced index has no preimage")

    def __len__(self) -> int:
        return self.forward.shape[0]

    def compose(self, then: "ReductionMap") -> "ReductionMap":
        """Map through ``self`` and then through ``then``."""
        if then.forward.shape[0] != self.reduced_count:
            raise ValueError(
                f"cannot compose: first map reduces to {self.reduced_count} rows, "
                f"second map starts from {then.forward.shape[0]}"
            )
        return ReductionMap(then.forward[self.forward], then.reduced_count)

    @staticmethod
    def identity(n: int) -> "ReductionMap":
        return ReductionMap(np.arange(n, dtype=np.int64), n)


def image_to_matrix(image) -> np.ndarray:
    """Flatten an H x W x 3 pixel grid into an (H*W) x 3 matrix, row-major."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an H x W x 3 image, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("image must be non-empty")
    return as_feature_matrix(arr.reshape(-1, 3))


def matrix_to_image(matrix: np.ndarray, height: int, width: int) -> np.ndarray:
    """Inverse of :func:`image_to_matrix`; exact for 8-bit channel values."""
    m = as_feature_matrix(matrix)
    if m.shape != (height * width, 3):
        raise ValueError(f"matrix shape {m.shape} does not match {height}x{width} RGB image")
    if m.max() > 255:
        raise ValueError("channel values exceed 8-bit range")
    return m.reshape(height, width, 3).astype(np.uint8)


def cantor_pair(a: int, b: int) -> int:
    """Cantor pairing of two naturals: (a+b)(a+b+1)/2 + b, injective on N x N.

    Computed with Python integers, so it is exact for any input size.
    """
    a, b = int(a), int(b)
    if a < 0 or b < 0:
        raise ValueError(f"cantor_pair requires non-negative inputs, got ({a}, {b})")
    s = a + b
    return s * (s + 1) // 2 + b


def row_key(row) -> int:
    """Left-fold cantor_pair across a feature row; injective on the row domain."""
    vals = np.asarray(row).ravel()
    if vals.size < 1:
        raise ValueError("row must have at least one feature")
    key = int(vals[0])
    if key < 0:
        raise ValueError("row entries must be non-negative")
    for v in vals[1:]:
        key = cantor_pair(key, int(v))
    return key


def row_keys(m: np.ndarray) -> np.ndarray:
    """Vectorized row_key over all rows, in uint64 arithmetic.

    Raises OverflowError as soon as a fold step would exceed uint64; keys
    for 8-bit image data peak near 2**34, far inside the safe range.
    """
    m = as_feature_matrix(m)
    keys = m[:, 0].astype(np.uint64)
    for j in range(1, m.shape[1]):
        col = m[:, j].astype(np.uint64)
        headroom = np.uint64(_PAIR_SUM_MAX) - np.minimum(keys, np.uint64(_PAIR_SUM_MAX))
        if (keys > _PAIR_SUM_MAX).any() or (col > headroom).any():
            bad = int(np.argmax((keys > _PAIR_SUM_MAX) | (col > headroom)))
            raise OverflowError(
                f"Cantor key for row {bad} exceeds 64-bit range at column {j}; "
                "reduce the feature value range (e.g. quantize) before deduplication"
            )
        s = keys + col
        keys = s * (s + np.uint64(1)) // np.uint64(2) + col
    return keys


def deduplicate(m: np.ndarray) -> tuple[np.ndarray, ReductionMap]:
    """Collapse duplicate rows, keeping first occurrences in row-major order.

    Returns the matrix of distinct rows and the map sending each source row
    to its representative.
    """
    m = as_feature_matrix(m)
    keys = row_keys(m)
    _, first_idx, inverse = np.unique(keys, return_index=True, return_inverse=True)
    # np.unique orders by key value; remap to first-occurrence order.
    order = np.argsort(first_idx, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    reduced = m[np.sort(first_idx)]
    return reduced, ReductionMap(rank[inverse], reduced.shape[0])


def upsample_labels(labels: np.ndarray, rmap: ReductionMap) -> np.ndarray:
    """Expand per-reduced-row labels back to source rows: out[i] = labels[forward[i]]."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != rmap.reduced_count:
        raise ValueError(
            f"labels length {labels.shape} does not match reduced_count {rmap.reduced_count}"
        )
    return labels[rmap.forward]


def expand_rows(reduced: np.ndarray, rmap: ReductionMap) -> np.ndarray:
    """Rebuild a full-size matrix by looking up each source row's representative."""
    reduced = as_feature_matrix(reduced)
    if reduced.shape[0] != rmap.reduced_count:
        raise ValueError("reduced row count does not match the map")
    return reduced[rmap.forward]


def compact_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel to contiguous ids 0..L-1 in order of first appearance."""
    labels = np.asarray(labels)
    _, first_idx, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first_idx, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse].astype(np.int64)


# ---------------------------------------------------------------------------
# File interfaces: PNG / binary PPM images, headerless numeric CSV, label output
# ---------------------------------------------------------------------------

_SUPPORTED_IMAGE_FORMATS = {"PNG", "PPM"}


def load_image(path) -> np.ndarray:
    """Read an 8-bit RGB image (PNG or binary PPM) as an H x W x 3 uint8 array."""
    with Image.open(path) as im:
        if im.format not in _SUPPORTED_IMAGE_FORMATS:
            raise ValueError(f"{path}: unsupported image format {im.format!r} (PNG or PPM required)")
        if im.mode != "RGB":
            raise ValueError(
                f"{path}: unsupported image mode {im.mode!r}; 8-bit RGB without alpha required"
            )
        arr = np.asarray(im, dtype=np.uint8)
    if arr.size == 0:
        raise ValueError(f"{path}: image is empty")
    return arr


def save_image_png(path, image: np.ndarray) -> None:
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def segment_palette(n_segments: int) -> np.ndarray:
    """Maximally hue-spaced colors for label rendering, one RGB triple per segment."""
    colors = np.zeros((n_segments, 3), dtype=np.uint8)
    for i in range(n_segments):
        r, g, b = colorsys.hsv_to_rgb(i / n_segments, 0.85, 0.95)
        colors[i] = (round(r * 255), round(g * 255), round(b * 255))
    return colors


def save_label_png(path, labels: np.ndarray, height: int, width: int) -> None:
    """Write labels as an indexed-color PNG (true-color fallback past 256 segments)."""
    labels = np.asarray(labels)
    if labels.shape[0] != height * width:
        raise ValueError("label count does not match image dimensions")
    n = int(labels.max()) + 1
    colors = segment_palette(n)
    if n <= 256:
        im = Image.fromarray(labels.reshape(height, width).astype(np.uint8), mode="P")
        palette = np.zeros((256, 3), dtype=np.uint8)
        palette[:n] = colors
        im.putpalette(palette.ravel().tolist())
    else:
        im = Image.fromarray(colors[labels].reshape(height, width, 3), mode="RGB")
    im.save(path, format="PNG")


def load_csv_matrix(path, quantize_levels: int = 0) -> np.ndarray:
    """Read a headerless numeric CSV as a feature matrix.

    Real-valued columns are rounded half-up to non-negative integers
    (clamped at zero). With ``quantize_levels`` > 0 each column is first
    mapped affinely onto [0, quantize_levels - 1].
    """
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for r, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            parsed = []
            for c, cell in enumerate(cells):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(f"{path}: non-numeric cell at row {r + 1}, column {c + 1}: {cell!r}")
            if rows and len(parsed) != len(rows[0]):
                raise ValueError(f"{path}: row {r + 1} has {len(parsed)} columns, expected {len(rows[0])}")
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    if quantize_levels > 0:
        lo = data.min(axis=0)
        span = data.max(axis=0) - lo
        span[span == 0] = 1.0
        data = (data - lo) / span * (quantize_levels - 1)
    quantized = np.floor(data + 0.5)
    return as_feature_matrix(np.maximum(quantized, 0).astype(np.int64))


def save_labels_csv(path, labels: np.ndarray) -> None:
    np.savetxt(path, np.asarray(labels, dtype=np.int64), fmt="%d")


def load_labels_csv(path) -> np.ndarray:
    labels = np.loadtxt(path, dtype=np.int64, ndmin=1)
    if labels.ndim != 1:
        raise ValueError(f"{path}: expected a single-column label CSV")
    return labels
