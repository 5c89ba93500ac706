"""Unsupervised segmentation and clustering on a color-reduced feature graph.

Large discrete-feature datasets (image pixels, tabular rows) are collapsed
to a few hundred representative rows, connected into a complete Euclidean
graph, and partitioned by minimizing a resolution-tunable Potts energy;
the resulting segment labels are expanded back to every original row.
"""

__version__ = "0.1.0"

from .config import PottsConfig
from .dataset import (
    ReductionMap,
    cantor_pair,
    deduplicate,
    expand_rows,
    image_to_matrix,
    matrix_to_image,
    row_key,
    upsample_labels,
)
from .downsample import DownsampleResult, downsample, initial_budget, kmeans_1d, pid_step, quantize_once
from .evaluate import (
    GaussianCluster,
    SyntheticSpec,
    default_synthetic_spec,
    generate_synthetic,
    kmeans_baseline,
    nmi,
    shannon_entropy,
    ssim,
    sweep_report,
)
from .graph import FeatureGraph, build_graph, estimate_mean_edge, mean_pairwise_distance
from .pipeline import PipelineResult, run_pipeline
from .potts import (
    NEW_SEGMENT,
    Solution,
    best_of_restarts,
    edge_weight,
    gamma_sweep,
    hamiltonian,
    minimize,
    move_delta,
)

__all__ = [
    "PottsConfig",
    "ReductionMap",
    "cantor_pair",
    "deduplicate",
    "expand_rows",
    "image_to_matrix",
    "matrix_to_image",
    "row_key",
    "upsample_labels",
    "DownsampleResult",
    "downsample",
    "initial_budget",
    "kmeans_1d",
    "pid_step",
    "quantize_once",
    "GaussianCluster",
    "SyntheticSpec",
    "default_synthetic_spec",
    "generate_synthetic",
    "kmeans_baseline",
    "nmi",
    "shannon_entropy",
    "ssim",
    "sweep_report",
    "FeatureGraph",
    "build_graph",
    "estimate_mean_edge",
    "mean_pairwise_distance",
    "PipelineResult",
    "run_pipeline",
    "NEW_SEGMENT",
    "Solution",
    "best_of_restarts",
    "edge_weight",
    "gamma_sweep",
    "hamiltonian",
    "minimize",
    "move_delta",
    "__version__",
]
