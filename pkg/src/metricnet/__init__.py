"""Multilayer perceptrons with analytically calculated weights.

Networks implementing nearest-neighbor and k-nearest-neighbors recognition
are assembled directly from prototype images: first-layer weights are
differences of squared-Euclidean distance fields, upper layers wire the
pairwise comparisons into per-class outputs. The same parameters run in
exact threshold mode or through a sigmoid for backpropagation fine-tuning,
and a harness reproduces calculated-vs-random initialization experiments.
"""

from .distance_field import (
    DistanceField,
    WeightTable,
    build_weight_table,
    compute_distance_field,
    format_weight_table,
)
from .errors import (
    ConfigError,
    DimensionError,
    EmptyImageError,
    FormatError,
    MetricNetError,
    ModeError,
    RangeError,
    SelectionError,
    TruncationError,
)
from .harness import (
    ComparisonRecord,
    ExperimentPlan,
    cross_check,
    emit_reports,
    load_model,
    run_baseline,
    run_comparison,
    save_model,
    speedup_pct,
)
from .inference import (
    REJECTED,
    Activations,
    EvalReport,
    classify,
    evaluate,
    forward,
)
from .mnist_io import (
    DEFAULT_BINARIZE_THRESHOLD,
    BitImage,
    GrayImage,
    LabeledDataset,
    PrototypeSet,
    binarize,
    load_dataset,
    parse_idx_images,
    parse_idx_labels,
    select_prototypes,
    take_prefix,
    write_idx_images,
    write_idx_labels,
)
from .network_builder import (
    SIGMOID,
    THRESHOLD,
    DenseLayer,
    LayeredNetwork,
    NetworkMeta,
    build_knn_network,
    build_nn_network,
    ordered_pairs,
    randomize_weights,
    to_sigmoid,
)
from .oracle import (
    brute_force_distance_field,
    chamfer_scores,
    knn_oracle,
    nn_oracle,
)
from .trainer import (
    EpochMetrics,
    TrainConfig,
    TrainHistory,
    backprop_step,
    loss,
    train,
    train_epoch,
)

__version__ = "0.1.0"
