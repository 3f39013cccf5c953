"""Command-line interface: build, eval, train, compare, cross-check."""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from .harness import (
    ExperimentPlan,
    cross_check,
    load_model,
    run_comparison,
    save_model,
)
from .inference import evaluate
from .mnist_io import (
    DEFAULT_BINARIZE_THRESHOLD,
    MNIST_FILE_NAMES,
    load_dataset,
    resolve_mnist_path,
    select_prototypes,
    take_prefix,
)
from .network_builder import (
    SIGMOID,
    build_knn_network,
    build_nn_network,
    to_sigmoid,
)
from .trainer import TrainConfig, train_epoch


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip() != "")


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip() != "")


def _add_data_args(parser: argparse.ArgumentParser, split_flag: bool = False) -> None:
    parser.add_argument("--data-dir", type=Path, help="directory with the four MNIST IDX files (.gz ok)")
    parser.add_argument("--images", type=Path, help="explicit IDX image file (overrides --data-dir)")
    parser.add_argument("--labels", type=Path, help="explicit IDX label file (overrides --data-dir)")
    if split_flag:
        parser.add_argument("--split", choices=["test", "train"], default="test",
                            help="which pair of files to use from --data-dir")


def _resolve_pair(args, split: str) -> tuple[Path, Path]:
    if args.images is not None and args.labels is not None:
        return args.images, args.labels
    if args.data_dir is None:
        raise SystemExit("need --data-dir or both --images and --labels")
    return (
        resolve_mnist_path(args.data_dir, MNIST_FILE_NAMES[f"{split}_images"]),
        resolve_mnist_path(args.data_dir, MNIST_FILE_NAMES[f"{split}_labels"]),
    )


def _add_proto_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--prototypes-per-class", type=int, default=3)
    parser.add_argument("--prototype-source", choices=["test", "train"], default="test")
    parser.add_argument("--binarize-threshold", type=int,
                        default=DEFAULT_BINARIZE_THRESHOLD)
    parser.add_argument("--seed", type=int, default=0)


def _add_train_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs-rates", type=_csv_floats, default=(0.1, 0.1, 0.02),
                        help="comma-separated learning rate per epoch")
    parser.add_argument("--target-active", type=float, default=0.7)
    parser.add_argument("--target-inactive", type=float, default=0.2)
    parser.add_argument("--update-policy", choices=["misclassified", "all"],
                        default="misclassified")
    parser.add_argument("--shuffle-seed", type=int, default=None)


def _load_prototypes(args):
    images, labels = _resolve_pair(args, args.prototype_source)
    data = load_dataset(images, labels)
    return select_prototypes(
        data, args.prototypes_per_class, args.binarize_threshold, args.seed
    )


def _cmd_build(args) -> int:
    protos = _load_prototypes(args)
    t0 = time.perf_counter()
    if args.arch == "knn":
        net = build_knn_network(protos, args.s_neighbors)
    else:
        net = build_nn_network(protos)
    t_construct = time.perf_counter() - t0
    if args.sigmoid:
        net = to_sigmoid(net)
    sizes = " / ".join(str(s) for s in net.layer_sizes)
    print(f"built {net.meta.variant} network, layers {sizes}, "
          f"{net.parameter_count} parameters, t_construct = {t_construct:.4f} s")
    if args.out:
        save_model(net, args.out)
        print(f"saved model to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    net = load_model(args.model)
    images, labels = _resolve_pair(args, args.split)
    data = load_dataset(images, labels)
    if args.subset_size is not None:
        data = take_prefix(data, args.subset_size)
    report = evaluate(net, data, args.binarize_threshold)
    print(report.to_text())
    if args.csv:
        report.write_csv(args.csv)
        print(f"wrote {args.csv}")
    return 0


def _cmd_train(args) -> int:
    net = load_model(args.model)
    if net.mode != SIGMOID:
        net = to_sigmoid(net)
        print("converted model to sigmoid mode for training")
    images, labels = _resolve_pair(args, args.split)
    data = load_dataset(images, labels)
    if args.subset_size is not None:
        data = take_prefix(data, args.subset_size)
    cfg = TrainConfig(
        epoch_rates=args.epochs_rates,
        target_active=args.target_active,
        target_inactive=args.target_inactive,
        update_policy=args.update_policy,
        shuffle_seed=args.shuffle_seed,
    )
    cfg.validate()
    rng = (
        np.random.default_rng(cfg.shuffle_seed)
        if cfg.shuffle_seed is not None
        else None
    )
    rows = []
    for e, rate in enumerate(cfg.epoch_rates):
        net, metrics = train_epoch(
            net, data, rate, cfg, args.binarize_threshold, rng
        )
        row = [e + 1, rate, metrics.recognized_count, metrics.recognized_pct,
               metrics.s_err, metrics.wall_time, metrics.corrected_count]
        line = (f"epoch {e + 1} rate {rate}: recognized {metrics.recognized_count} "
                f"({metrics.recognized_pct:.2f}%), S_err {metrics.s_err:.2f}, "
                f"{metrics.wall_time:.1f} s")
        if args.post_epoch_eval:
            post = evaluate(net, data, args.binarize_threshold)
            row += [post.correct, post.pct_exact]
            line += f", post-epoch {post.correct} ({post.pct_exact:.2f}%)"
        rows.append(row)
        print(line)
    if args.log:
        header = ["epoch", "rate", "recognized", "pct", "s_err", "seconds",
                  "corrected"]
        if args.post_epoch_eval:
            header += ["post_recognized", "post_pct"]
        with open(args.log, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        print(f"wrote {args.log}")
    if args.out:
        save_model(net, args.out)
        print(f"saved model to {args.out}")
    return 0


def _cmd_compare(args) -> int:
    if args.data_dir is None:
        raise SystemExit("compare needs --data-dir")
    sizes = args.sizes
    test_subset = args.test_subset
    seeds = args.seeds
    if args.full_scale:
        sizes = (60000, 40000, 20000)
        test_subset = None
        seeds = (args.seed,)
    plan = ExperimentPlan(
        train_images=resolve_mnist_path(args.data_dir, MNIST_FILE_NAMES["train_images"]),
        train_labels=resolve_mnist_path(args.data_dir, MNIST_FILE_NAMES["train_labels"]),
        test_images=resolve_mnist_path(args.data_dir, MNIST_FILE_NAMES["test_images"]),
        test_labels=resolve_mnist_path(args.data_dir, MNIST_FILE_NAMES["test_labels"]),
        subset_sizes=sizes,
        test_subset=test_subset,
        prototypes_per_class=args.prototypes_per_class,
        prototype_source=args.prototype_source,
        binarize_threshold=args.binarize_threshold,
        train_cfg=TrainConfig(
            epoch_rates=args.epochs_rates,
            target_active=args.target_active,
            target_inactive=args.target_inactive,
            update_policy=args.update_policy,
            shuffle_seed=args.shuffle_seed,
        ),
        seeds=seeds,
        out_dir=args.out_dir,
    )
    records = run_comparison(plan)
    for rec in records:
        final = rec.test_reports[-1]
        print(f"size {rec.subset_size} {rec.init_kind:>10} seed {rec.seed}: "
              f"final test {final.correct}/{final.total} ({final.pct}%), "
              f"train {rec.total_train_time:.1f} s, "
              f"speedup {rec.speedup_pct:.1f}%")
    if args.out_dir:
        print(f"reports written to {args.out_dir}")
    return 0


def _cmd_cross_check(args) -> int:
    protos = _load_prototypes(args)
    images, labels = _resolve_pair(args, args.split)
    data = load_dataset(images, labels)
    mismatches = cross_check(
        protos,
        data,
        args.binarize_threshold,
        sample_size=args.sample,
        seed=args.seed,
        s_values=args.s,
    )
    if mismatches:
        for m in mismatches:
            print(m)
        print(f"{len(mismatches)} mismatches")
        return 1
    print(f"cross-check ok: {args.sample} samples, zero mismatches")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metricnet",
        description="Networks with weights calculated from prototype distances, "
                    "plus backprop fine-tuning and comparison experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct a calculated-weight network")
    _add_data_args(p)
    _add_proto_args(p)
    p.add_argument("--arch", choices=["nn", "knn"], default="nn")
    p.add_argument("--s-neighbors", type=int, default=3, help="S for the knn variant")
    p.add_argument("--sigmoid", action="store_true", help="store in sigmoid mode")
    p.add_argument("--out", type=Path, help="model output path")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("eval", help="evaluate a model on a dataset")
    _add_data_args(p, split_flag=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--subset-size", type=int, default=None)
    p.add_argument("--binarize-threshold", type=int, default=DEFAULT_BINARIZE_THRESHOLD)
    p.add_argument("--csv", type=Path, help="also write the report as CSV")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("train", help="fine-tune a model with backpropagation")
    _add_data_args(p, split_flag=True)
    p.set_defaults(split="train")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--subset-size", type=int, default=None)
    p.add_argument("--binarize-threshold", type=int, default=DEFAULT_BINARIZE_THRESHOLD)
    _add_train_args(p)
    p.add_argument("--post-epoch-eval", action="store_true",
                   help="re-score the training subset after each epoch")
    p.add_argument("--log", type=Path, help="CSV training log path")
    p.add_argument("--out", type=Path, help="trained model output path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("compare", help="calculated vs random initialization runs")
    p.add_argument("--data-dir", type=Path, required=True)
    _add_proto_args(p)
    _add_train_args(p)
    p.add_argument("--sizes", type=_csv_ints, default=(2000, 1000))
    p.add_argument("--test-subset", type=int, default=2000)
    p.add_argument("--seeds", type=_csv_ints, default=(0, 1, 2, 3, 4))
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--full-scale", action="store_true",
                   help="sizes 60000/40000/20000, full test set, single seed")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("cross-check", help="network vs brute-force oracle agreement")
    _add_data_args(p, split_flag=True)
    _add_proto_args(p)
    p.add_argument("--sample", type=int, default=200)
    p.add_argument("--s", type=_csv_ints, default=(1, 2, 3),
                   help="k-NN S values to check alongside the NN network")
    p.set_defaults(func=_cmd_cross_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
