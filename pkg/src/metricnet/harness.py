"""Experiment orchestration: baseline, paired comparison runs, reports.

A comparison plan pairs, per training-set size and per seed, a
calculated-weight network with a random-initialization twin that shares
its topology, prototype set, test set, schedule and data order. Only the
starting parameters differ. Everything random flows from the plan's seeds,
so re-running a plan reproduces every non-time column of every CSV.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, RangeError
from .inference import EvalReport, classify, evaluate
from .mnist_io import (
    DEFAULT_BINARIZE_THRESHOLD,
    LabeledDataset,
    PrototypeSet,
    binarize,
    load_dataset,
    select_prototypes,
    take_prefix,
)
from .network_builder import (
    DenseLayer,
    LayeredNetwork,
    NetworkMeta,
    build_knn_network,
    build_nn_network,
    randomize_weights,
    to_sigmoid,
)
from .oracle import knn_oracle, nn_oracle, prototype_fields
from .trainer import EpochMetrics, TrainConfig, train_epoch

MODEL_FORMAT = "metricnet-model"
MODEL_VERSION = 1

CALCULATED = "calculated"
RANDOM = "random"

# Conventional baseline: every parameter drawn uniformly from this range.
RANDOM_INIT_RANGE = (-0.5, 0.5)

COMBINED_COLUMNS = [
    "subset_size",
    "init_kind",
    "seed",
    "epoch",
    "rate",
    "train_recognized",
    "train_pct",
    "s_err",
    "epoch_seconds",
    "test_correct",
    "test_pct",
]


@dataclass
class ExperimentPlan:
    train_images: Path
    train_labels: Path
    test_images: Path
    test_labels: Path
    subset_sizes: tuple[int, ...] = (2000, 1000)
    test_subset: int | None = 2000  # None = full test set
    prototypes_per_class: int = 3
    prototype_source: str = "test"  # default draw; "train" available
    binarize_threshold: int = DEFAULT_BINARIZE_THRESHOLD
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    random_lo: float = RANDOM_INIT_RANGE[0]
    random_hi: float = RANDOM_INIT_RANGE[1]
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    out_dir: Path | None = None


@dataclass
class ComparisonRecord:
    subset_size: int
    init_kind: str
    seed: int
    epochs: list[EpochMetrics]
    test_reports: list[EvalReport]
    total_train_time: float
    t_construct: float
    prototype_indices: tuple[int, ...] | None
    speedup_pct: float | None = None


def speedup_pct(t_calc: float, t_rand: float) -> float:
    """Relative time saving of the calculated run over the random run."""
    if t_rand <= 0:
        return 0.0
    return (t_rand - t_calc) * 100.0 / t_rand


def _load_plan_datasets(
    plan: ExperimentPlan,
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    train = load_dataset(plan.train_images, plan.train_labels)
    test = load_dataset(plan.test_images, plan.test_labels)
    proto_source = test if plan.prototype_source == "test" else train
    return train, test, proto_source


def run_baseline(
    plan: ExperimentPlan, seed: int | None = None
) -> tuple[LayeredNetwork, EvalReport, float]:
    """Build the calculated network, time construction, score the test set."""
    _, test, proto_source = _load_plan_datasets(plan)
    if plan.test_subset is not None:
        test = take_prefix(test, plan.test_subset)
    protos = select_prototypes(
        proto_source,
        plan.prototypes_per_class,
        plan.binarize_threshold,
        plan.seeds[0] if seed is None else seed,
    )
    t0 = time.perf_counter()
    net = build_nn_network(protos)
    t_construct = time.perf_counter() - t0
    report = evaluate(net, test, plan.binarize_threshold)
    return net, report, t_construct


def _train_with_eval(
    net: LayeredNetwork,
    data: LabeledDataset,
    cfg: TrainConfig,
    test_data: LabeledDataset,
    threshold: int,
) -> tuple[LayeredNetwork, list[EpochMetrics], list[EvalReport], float]:
    """train() with a test-set snapshot evaluation after every epoch."""
    cfg.validate()
    out = net.copy()
    rng = (
        np.random.default_rng(cfg.shuffle_seed)
        if cfg.shuffle_seed is not None
        else None
    )
    epochs: list[EpochMetrics] = []
    reports: list[EvalReport] = []
    for rate in cfg.epoch_rates:
        out, metrics = train_epoch(out, data, rate, cfg, threshold, rng)
        epochs.append(metrics)
        reports.append(evaluate(out, test_data, threshold))
    total = sum(m.wall_time for m in epochs)
    return out, epochs, reports, total


def run_comparison(plan: ExperimentPlan) -> list[ComparisonRecord]:
    """The full comparative program over sizes, seeds and both init kinds."""
    if any(size <= 0 for size in plan.subset_sizes):
        raise RangeError(f"subset sizes must be positive: {plan.subset_sizes}")
    train, test, proto_source = _load_plan_datasets(plan)
    if plan.test_subset is not None:
        test = take_prefix(test, plan.test_subset)

    records: list[ComparisonRecord] = []
    for size in plan.subset_sizes:
        subset = take_prefix(train, size)
        for seed in plan.seeds:
            protos = select_prototypes(
                proto_source,
                plan.prototypes_per_class,
                plan.binarize_threshold,
                seed,
            )
            t0 = time.perf_counter()
            built = build_nn_network(protos)
            t_construct = time.perf_counter() - t0
            calculated = to_sigmoid(built)
            random_twin = randomize_weights(
                calculated, plan.random_lo, plan.random_hi, seed
            )
            pair: list[ComparisonRecord] = []
            for kind, start in ((CALCULATED, calculated), (RANDOM, random_twin)):
                _, epochs, reports, total = _train_with_eval(
                    start, subset, plan.train_cfg, test, plan.binarize_threshold
                )
                pair.append(
                    ComparisonRecord(
                        subset_size=size,
                        init_kind=kind,
                        seed=seed,
                        epochs=epochs,
                        test_reports=reports,
                        total_train_time=total,
                        t_construct=t_construct,
                        prototype_indices=protos.source_indices,
                    )
                )
            saving = speedup_pct(pair[0].total_train_time, pair[1].total_train_time)
            pair[0].speedup_pct = saving
            pair[1].speedup_pct = saving
            records.extend(pair)

    if plan.out_dir is not None:
        emit_reports(records, plan.out_dir, plan.train_cfg)
    return records


def _run_stem(record: ComparisonRecord) -> str:
    return f"{record.subset_size}_{record.init_kind}_seed{record.seed}"


def emit_reports(
    records: list[ComparisonRecord],
    out_dir: str | Path,
    cfg: TrainConfig | None = None,
) -> list[Path]:
    """Write per-run CSVs, the combined comparison CSV and trend curves."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rates = cfg.epoch_rates if cfg is not None else None
    written: list[Path] = []

    def rate_of(epoch_idx: int) -> float | str:
        if rates is not None and epoch_idx < len(rates):
            return rates[epoch_idx]
        return ""

    combined = out_dir / "comparison.csv"
    with open(combined, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMBINED_COLUMNS)
        for rec in records:
            for e, (metrics, report) in enumerate(zip(rec.epochs, rec.test_reports)):
                writer.writerow(
                    [
                        rec.subset_size,
                        rec.init_kind,
                        rec.seed,
                        e + 1,
                        rate_of(e),
                        metrics.recognized_count,
                        metrics.recognized_pct,
                        metrics.s_err,
                        metrics.wall_time,
                        report.correct,
                        report.pct_exact,
                    ]
                )
    written.append(combined)

    for rec in records:
        run_path = out_dir / f"run_{_run_stem(rec)}.csv"
        with open(run_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "epoch",
                    "rate",
                    "recognized",
                    "pct",
                    "s_err",
                    "seconds",
                    "test_correct",
                    "test_pct",
                ]
            )
            for e, (metrics, report) in enumerate(zip(rec.epochs, rec.test_reports)):
                writer.writerow(
                    [
                        e + 1,
                        rate_of(e),
                        metrics.recognized_count,
                        metrics.recognized_pct,
                        metrics.s_err,
                        metrics.wall_time,
                        report.correct,
                        report.pct_exact,
                    ]
                )
        written.append(run_path)

        classes_path = out_dir / f"classes_{_run_stem(rec)}.csv"
        with open(classes_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "class", "s", "i", "p"])
            for e, report in enumerate(rec.test_reports):
                for row in report.to_csv_rows()[1:]:
                    writer.writerow([e + 1, *row])
        written.append(classes_path)

    keys = sorted({(r.subset_size, r.init_kind) for r in records})

    acc_path = out_dir / "accuracy_vs_size.csv"
    with open(acc_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subset_size", "init_kind", "mean_final_test_pct"])
        for size, kind in keys:
            finals = [
                r.test_reports[-1].pct_exact
                for r in records
                if r.subset_size == size and r.init_kind == kind and r.test_reports
            ]
            if finals:
                writer.writerow([size, kind, sum(finals) / len(finals)])
    written.append(acc_path)

    time_path = out_dir / "time_vs_size.csv"
    with open(time_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subset_size", "init_kind", "mean_total_train_seconds"])
        for size, kind in keys:
            totals = [
                r.total_train_time
                for r in records
                if r.subset_size == size and r.init_kind == kind
            ]
            writer.writerow([size, kind, sum(totals) / len(totals)])
    written.append(time_path)

    meta_path = out_dir / "runs_meta.json"
    meta = [
        {
            "subset_size": rec.subset_size,
            "init_kind": rec.init_kind,
            "seed": rec.seed,
            "prototype_indices": list(rec.prototype_indices or ()),
            "t_construct": rec.t_construct,
            "total_train_time": rec.total_train_time,
            "speedup_pct": rec.speedup_pct,
        }
        for rec in records
    ]
    meta_path.write_text(json.dumps(meta, indent=1))
    written.append(meta_path)
    return written


_COMBINED_TYPES = {
    "subset_size": int,
    "init_kind": str,
    "seed": int,
    "epoch": int,
    "rate": float,
    "train_recognized": int,
    "train_pct": float,
    "s_err": float,
    "epoch_seconds": float,
    "test_correct": int,
    "test_pct": float,
}


def read_combined_csv(path: str | Path) -> list[dict]:
    """Parse the combined comparison CSV back into typed row dicts."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COMBINED_COLUMNS:
            raise FormatError(f"unexpected columns {reader.fieldnames}")
        return [
            {key: _COMBINED_TYPES[key](value) for key, value in row.items()}
            for row in reader
        ]


def save_model(net: LayeredNetwork, path: str | Path) -> None:
    """Versioned text serialization; round-trips every parameter bit-exactly."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mode": net.mode,
        "meta": {
            "variant": net.meta.variant,
            "n_prototypes": net.meta.n_prototypes,
            "n_classes": net.meta.n_classes,
            "prototype_classes": list(net.meta.prototype_classes),
            "image_shape": list(net.meta.image_shape),
            "s_neighbors": net.meta.s_neighbors,
            "prototype_indices": (
                list(net.meta.prototype_indices)
                if net.meta.prototype_indices is not None
                else None
            ),
        },
        "layers": [
            {
                "shape": list(layer.weights.shape),
                "weights": layer.weights.tolist(),
                "bias": layer.bias.tolist(),
                "strict": layer.strict.tolist(),
            }
            for layer in net.layers
        ],
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")))


def load_model(path: str | Path) -> LayeredNetwork:
    """Inverse of save_model; rejects unknown formats and versions."""
    try:
        doc = json.loads(Path(path).read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"not a model file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise FormatError("missing or wrong format marker")
    if doc.get("version") != MODEL_VERSION:
        raise FormatError(f"unsupported model version {doc.get('version')!r}")
    try:
        meta_doc = doc["meta"]
        meta = NetworkMeta(
            variant=meta_doc["variant"],
            n_prototypes=int(meta_doc["n_prototypes"]),
            n_classes=int(meta_doc["n_classes"]),
            prototype_classes=tuple(int(c) for c in meta_doc["prototype_classes"]),
            image_shape=tuple(int(v) for v in meta_doc["image_shape"]),
            s_neighbors=meta_doc.get("s_neighbors"),
            prototype_indices=(
                tuple(int(i) for i in meta_doc["prototype_indices"])
                if meta_doc.get("prototype_indices") is not None
                else None
            ),
        )
        layers = []
        for entry in doc["layers"]:
            weights = np.array(entry["weights"], dtype=np.float64)
            weights = weights.reshape(entry["shape"])
            bias = np.array(entry["bias"], dtype=np.float64)
            strict = np.array(entry["strict"], dtype=bool)
            if weights.shape[0] != len(bias) or len(bias) != len(strict):
                raise FormatError("inconsistent layer dimensions")
            layers.append(DenseLayer(weights, bias, strict))
        return LayeredNetwork(layers, doc["mode"], meta)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed model document: {exc}") from exc


def cross_check(
    protos: PrototypeSet,
    data: LabeledDataset,
    threshold: int = DEFAULT_BINARIZE_THRESHOLD,
    sample_size: int = 200,
    seed: int = 0,
    s_values: tuple[int, ...] = (),
) -> list[str]:
    """Network-vs-oracle agreement on a sampled subset; returns mismatches."""
    rng = np.random.default_rng(seed)
    n = min(sample_size, len(data))
    indices = rng.choice(len(data), size=n, replace=False)
    fields = prototype_fields(protos)
    nn_net = build_nn_network(protos)
    knn_nets = {s: build_knn_network(protos, s) for s in s_values}
    mismatches: list[str] = []
    for idx in indices:
        x = binarize(data.images[int(idx)], threshold)
        got = classify(nn_net, x)
        want = nn_oracle(protos, x, fields)
        if got != want:
            mismatches.append(f"nn image {int(idx)}: network {got} oracle {want}")
        for s, net in knn_nets.items():
            got = classify(net, x)
            want = knn_oracle(protos, x, s, fields)
            if got != want:
                mismatches.append(
                    f"knn S={s} image {int(idx)}: network {got} oracle {want}"
                )
    return mismatches
