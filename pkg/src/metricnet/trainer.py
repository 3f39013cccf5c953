"""Stochastic backpropagation fine-tuning of sigmoid-mode networks.

One sample at a time, output-to-input gradient descent on the squared error
against the 0.7 / 0.2 target coding. The default policy corrects only
samples the current network misclassifies, and the per-epoch error sum
runs over exactly those corrected samples.

backprop_step and train_epoch update the network they are given in place;
train() works on a copy, leaving the caller's network untouched.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, ModeError
from .inference import dataset_matrix, decide_from_states, forward_vector
from .mnist_io import DEFAULT_BINARIZE_THRESHOLD, BitImage, LabeledDataset
from .network_builder import SIGMOID, LayeredNetwork

MISCLASSIFIED_ONLY = "misclassified"
ALL_SAMPLES = "all"


@dataclass
class TrainConfig:
    epoch_rates: tuple[float, ...] = (0.1, 0.1, 0.02)
    target_active: float = 0.7
    target_inactive: float = 0.2
    update_policy: str = MISCLASSIFIED_ONLY
    shuffle_seed: int | None = None  # None = keep file order

    def validate(self) -> None:
        if not self.epoch_rates:
            raise ConfigError("epoch_rates must not be empty")
        if any(r <= 0 for r in self.epoch_rates):
            raise ConfigError(f"learning rates must be positive: {self.epoch_rates}")
        if not 0 < self.target_inactive < self.target_active < 1:
            raise ConfigError(
                "targets must satisfy 0 < inactive < active < 1, got "
                f"{self.target_inactive} / {self.target_active}"
            )
        if self.update_policy not in (MISCLASSIFIED_ONLY, ALL_SAMPLES):
            raise ConfigError(f"unknown update policy {self.update_policy!r}")


@dataclass
class EpochMetrics:
    recognized_count: int
    recognized_pct: float
    s_err: float
    wall_time: float
    corrected_count: int


@dataclass
class TrainHistory:
    epochs: list[EpochMetrics] = field(default_factory=list)
    total_time: float = 0.0
    initialization_kind: str | None = None


def target_vector(n_outputs: int, label: int, cfg: TrainConfig) -> np.ndarray:
    t = np.full(n_outputs, cfg.target_inactive)
    t[label] = cfg.target_active
    return t


def loss(outputs: np.ndarray, label: int, cfg: TrainConfig) -> float:
    """Half the summed squared residual against the target coding."""
    t = target_vector(len(outputs), label, cfg)
    diff = t - np.asarray(outputs, dtype=np.float64)
    return 0.5 * float(diff @ diff)


def _apply_gradient(
    net: LayeredNetwork,
    activations: list[np.ndarray],
    label: int,
    rate: float,
    cfg: TrainConfig,
) -> None:
    """Backward pass from stored activations; updates weights in place.

    activations[0] is the input vector, activations[l + 1] the output of
    layer l. Deltas are propagated with the pre-update weights.
    """
    y = activations[-1]
    delta = (y - target_vector(len(y), label, cfg)) * y * (1.0 - y)
    for l in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[l]
        prev = activations[l]
        if l > 0:
            back = (layer.weights.T @ delta) * prev * (1.0 - prev)
        layer.weights -= rate * np.outer(delta, prev)
        layer.bias -= rate * delta
        if l > 0:
            delta = back


def backprop_step(
    net: LayeredNetwork, x: BitImage, label: int, rate: float, cfg: TrainConfig
) -> LayeredNetwork:
    """One gradient-descent step on one sample; mutates and returns net."""
    if net.mode != SIGMOID:
        raise ModeError("backprop requires a sigmoid-mode network")
    a0 = x.bits.ravel().astype(np.float64)
    acts = forward_vector(net, a0)
    _apply_gradient(net, [a0, *acts.outputs], label, rate, cfg)
    return net


def _epoch_order(
    n: int, cfg: TrainConfig, rng: np.random.Generator | None
) -> np.ndarray:
    if rng is not None:
        return rng.permutation(n)
    if cfg.shuffle_seed is not None:
        return np.random.default_rng(cfg.shuffle_seed).permutation(n)
    return np.arange(n)


def train_epoch(
    net: LayeredNetwork,
    data: LabeledDataset,
    rate: float,
    cfg: TrainConfig,
    threshold: int = DEFAULT_BINARIZE_THRESHOLD,
    rng: np.random.Generator | None = None,
) -> tuple[LayeredNetwork, EpochMetrics]:
    """One pass over the dataset; mutates and returns net.

    Each sample is classified before any update, so recognized_count is the
    online accuracy of the evolving network. Under the misclassified-only
    policy a correct decision skips the gradient step entirely.
    """
    if net.mode != SIGMOID:
        raise ModeError("training requires a sigmoid-mode network")
    cfg.validate()
    inputs = dataset_matrix(data, threshold)
    if len(data) and inputs.shape[1] != net.input_size:
        raise DimensionError(
            f"images of {inputs.shape[1]} pixels, network expects {net.input_size}"
        )
    labels = data.labels
    order = _epoch_order(len(data), cfg, rng)

    start = time.perf_counter()
    recognized = 0
    corrected = 0
    s_err = 0.0
    for idx in order:
        x = inputs[idx]
        label = int(labels[idx])
        acts = forward_vector(net, x)
        decision = decide_from_states(net, acts.states[-1])
        if decision == label:
            recognized += 1
            if cfg.update_policy == MISCLASSIFIED_ONLY:
                continue
        s_err += loss(acts.outputs[-1], label, cfg)
        corrected += 1
        _apply_gradient(net, [x, *acts.outputs], label, rate, cfg)
    wall = time.perf_counter() - start

    n = len(data)
    metrics = EpochMetrics(
        recognized_count=recognized,
        recognized_pct=100.0 * recognized / n if n else 0.0,
        s_err=s_err,
        wall_time=wall,
        corrected_count=corrected,
    )
    return net, metrics


def train(
    net: LayeredNetwork,
    data: LabeledDataset,
    cfg: TrainConfig,
    threshold: int = DEFAULT_BINARIZE_THRESHOLD,
    initialization_kind: str | None = None,
) -> tuple[LayeredNetwork, TrainHistory]:
    """Run one epoch per configured learning rate on a copy of net."""
    cfg.validate()
    if net.mode != SIGMOID:
        raise ModeError("training requires a sigmoid-mode network")
    out = net.copy()
    rng = (
        np.random.default_rng(cfg.shuffle_seed)
        if cfg.shuffle_seed is not None
        else None
    )
    history = TrainHistory(initialization_kind=initialization_kind)
    t0 = time.perf_counter()
    for rate in cfg.epoch_rates:
        out, metrics = train_epoch(out, data, rate, cfg, threshold, rng)
        history.epochs.append(metrics)
    history.total_time = time.perf_counter() - t0
    return out, history
