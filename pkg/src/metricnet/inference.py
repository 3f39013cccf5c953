"""Forward passes, decision rules and per-class evaluation reports.

Threshold mode keeps the constructed network's integer algebra exact (all
values stay far below 2^53, so float64 matmuls lose nothing). Sigmoid mode
pushes the same biased states through the logistic function.

A classification either names a class or is REJECTED: in threshold mode
when zero or several output neurons fire, in sigmoid mode on an exact tie
of the final states. Ties are surfaced instead of broken so the network
stays exactly equivalent to the brute-force reference classifiers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError
from .mnist_io import (
    DEFAULT_BINARIZE_THRESHOLD,
    BitImage,
    LabeledDataset,
    binarize,
)
from .network_builder import THRESHOLD, LayeredNetwork

# Decision value for the tie / no-winner outcome.
REJECTED = None

_EVAL_CHUNK = 4096


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Logistic function, stable for large |x| (saturates to exact 0/1)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class Activations:
    """Per-layer states (weights.input + bias) and post-activation outputs."""

    states: list[np.ndarray]
    outputs: list[np.ndarray]


def _layer_outputs(net: LayeredNetwork, idx: int, states: np.ndarray) -> np.ndarray:
    layer = net.layers[idx]
    if net.mode == THRESHOLD:
        return np.where(layer.strict, states > 0, states >= 0).astype(np.float64)
    return sigmoid(states)


def forward_vector(net: LayeredNetwork, a: np.ndarray) -> Activations:
    """Forward pass over one flattened input vector."""
    if a.shape != (net.input_size,):
        raise DimensionError(
            f"input of {a.shape[0] if a.ndim == 1 else a.shape} values, "
            f"network expects {net.input_size}"
        )
    states: list[np.ndarray] = []
    outputs: list[np.ndarray] = []
    for idx, layer in enumerate(net.layers):
        s = layer.weights @ a + layer.bias
        a = _layer_outputs(net, idx, s)
        states.append(s)
        outputs.append(a)
    return Activations(states, outputs)


def forward(net: LayeredNetwork, x: BitImage) -> Activations:
    """Forward pass over one binary image."""
    return forward_vector(net, x.bits.ravel().astype(np.float64))


def _decide(net: LayeredNetwork, final_state: np.ndarray, final_out: np.ndarray):
    if net.mode == THRESHOLD:
        fired = np.flatnonzero(final_out == 1.0)
        if len(fired) == 1:
            return int(fired[0])
        return REJECTED
    # Sigmoid: argmax over states (outputs can saturate and alias ties).
    top = final_state.max()
    winners = np.flatnonzero(final_state == top)
    if len(winners) == 1:
        return int(winners[0])
    return REJECTED


def classify(net: LayeredNetwork, x: BitImage):
    """Class index of the unique winner, or REJECTED on ties/no-winner."""
    acts = forward(net, x)
    return _decide(net, acts.states[-1], acts.outputs[-1])


def decide_from_states(net: LayeredNetwork, final_state: np.ndarray):
    """Decision given the final layer's states (threshold flags applied here)."""
    if net.mode == THRESHOLD:
        strict = net.layers[-1].strict
        out = np.where(strict, final_state > 0, final_state >= 0).astype(np.float64)
        return _decide(net, final_state, out)
    return _decide(net, final_state, None)


def classify_batch(net: LayeredNetwork, inputs: np.ndarray) -> np.ndarray:
    """Decisions for a matrix of flattened inputs; -1 encodes REJECTED."""
    n = inputs.shape[0]
    decisions = np.empty(n, dtype=np.int64)
    for start in range(0, n, _EVAL_CHUNK):
        block = inputs[start : start + _EVAL_CHUNK]
        a = block.astype(np.float64)
        for idx, layer in enumerate(net.layers):
            s = a @ layer.weights.T + layer.bias
            if net.mode == THRESHOLD:
                a = np.where(layer.strict, s > 0, s >= 0).astype(np.float64)
            else:
                a = sigmoid(s)
        if net.mode == THRESHOLD:
            fired = a == 1.0
            unique = fired.sum(axis=1) == 1
            picks = fired.argmax(axis=1)
        else:
            top = s.max(axis=1, keepdims=True)
            ties = (s == top).sum(axis=1)
            unique = ties == 1
            picks = s.argmax(axis=1)
        decisions[start : start + len(block)] = np.where(unique, picks, -1)
    return decisions


@dataclass(frozen=True)
class EvalReport:
    """Per-class correct counts and totals, with text-table and CSV output."""

    per_class_correct: np.ndarray  # s_j
    per_class_total: np.ndarray  # i_j
    rejected: int

    def __eq__(self, other) -> bool:
        if not isinstance(other, EvalReport):
            return NotImplemented
        return (
            np.array_equal(self.per_class_correct, other.per_class_correct)
            and np.array_equal(self.per_class_total, other.per_class_total)
            and self.rejected == other.rejected
        )

    @property
    def class_count(self) -> int:
        return len(self.per_class_total)

    @property
    def correct(self) -> int:
        return int(self.per_class_correct.sum())

    @property
    def total(self) -> int:
        return int(self.per_class_total.sum())

    @property
    def pct(self) -> int:
        return round(100 * self.correct / self.total) if self.total else 0

    @property
    def pct_exact(self) -> float:
        return 100.0 * self.correct / self.total if self.total else 0.0

    def per_class_pct(self, j: int) -> int:
        total = int(self.per_class_total[j])
        return round(100 * int(self.per_class_correct[j]) / total) if total else 0

    def to_text(self) -> str:
        lines = []
        for j in range(self.class_count):
            lines.append(
                f"s{j} = {int(self.per_class_correct[j]):<6d} "
                f"i{j} = {int(self.per_class_total[j]):<6d} "
                f"p{j} = {self.per_class_pct(j)}%"
            )
        lines.append("Total")
        lines.append(
            f"s = {self.correct:<7d} i = {self.total:<7d} p = {self.pct}%"
        )
        lines.append(f"rejected = {self.rejected}")
        return "\n".join(lines)

    def to_csv_rows(self) -> list[list]:
        rows: list[list] = [["class", "s", "i", "p"]]
        for j in range(self.class_count):
            rows.append(
                [
                    j,
                    int(self.per_class_correct[j]),
                    int(self.per_class_total[j]),
                    self.per_class_pct(j),
                ]
            )
        rows.append(["total", self.correct, self.total, self.pct])
        return rows

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(self.to_csv_rows())


def dataset_matrix(data: LabeledDataset, threshold: int) -> np.ndarray:
    """Binarized flattened images stacked into one (n, pixels) matrix."""
    if len(data) == 0:
        return np.zeros((0, 0))
    return np.stack(
        [binarize(im, threshold).bits.ravel() for im in data.images]
    ).astype(np.float64)


def evaluate(
    net: LayeredNetwork,
    data: LabeledDataset,
    threshold: int = DEFAULT_BINARIZE_THRESHOLD,
) -> EvalReport:
    """Binarize, classify and tally per true class; REJECTED counts as wrong."""
    n_classes = data.class_count
    if len(data) == 0:
        zero = np.zeros(n_classes, dtype=np.int64)
        return EvalReport(zero, zero.copy(), 0)
    decisions = classify_batch(net, dataset_matrix(data, threshold))
    labels = data.labels
    per_total = np.bincount(labels, minlength=n_classes)[:n_classes]
    hits = decisions == labels
    per_correct = np.bincount(labels[hits], minlength=n_classes)[:n_classes]
    return EvalReport(
        per_correct.astype(np.int64),
        per_total.astype(np.int64),
        int((decisions == -1).sum()),
    )
