"""Assembly of the calculated-weight networks and their random twins.

Two architectures are built from a prototype set:

* nearest-neighbor, three layers sized N(N-1) / N / N_pat;
* k-nearest-neighbors, four layers sized N(N-1) / N / N_pat(N_pat-1) / N_pat.

Thresholds are stored as negated biases from construction time, with a
per-neuron flag telling threshold mode whether the neuron fires on a
strictly positive biased state or on a non-negative one. Switching to
sigmoid mode therefore changes no numbers at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance_field import compute_distance_field
from .errors import RangeError
from .mnist_io import PrototypeSet

THRESHOLD = "threshold"
SIGMOID = "sigmoid"


@dataclass
class DenseLayer:
    weights: np.ndarray  # shape (neurons, inputs), float64
    bias: np.ndarray  # shape (neurons,), float64; encodes -B
    strict: np.ndarray  # shape (neurons,), bool; True = fires on > 0, False = on >= 0

    @property
    def n_neurons(self) -> int:
        return self.weights.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.strict.copy())


@dataclass(frozen=True)
class NetworkMeta:
    """Construction record carried along with a network."""

    variant: str  # "nearest" or "knn"
    n_prototypes: int
    n_classes: int
    prototype_classes: tuple[int, ...]
    image_shape: tuple[int, int]  # (height, width)
    s_neighbors: int | None = None
    prototype_indices: tuple[int, ...] | None = None

    @property
    def pairs(self) -> list[tuple[int, int]]:
        """First-layer neuron index -> ordered prototype pair (i, j)."""
        return ordered_pairs(self.n_prototypes)

    @property
    def class_pairs(self) -> list[tuple[int, int]]:
        """k-NN third-layer neuron index -> ordered class pair (k, k1)."""
        return ordered_pairs(self.n_classes)


@dataclass
class LayeredNetwork:
    layers: list[DenseLayer]
    mode: str  # THRESHOLD or SIGMOID
    meta: NetworkMeta

    @property
    def input_size(self) -> int:
        return self.layers[0].n_inputs

    @property
    def layer_sizes(self) -> list[int]:
        return [layer.n_neurons for layer in self.layers]

    @property
    def parameter_count(self) -> int:
        return sum(l.weights.size + l.bias.size for l in self.layers)

    def copy(self) -> "LayeredNetwork":
        return LayeredNetwork([l.copy() for l in self.layers], self.mode, self.meta)


def ordered_pairs(count: int) -> list[tuple[int, int]]:
    """All ordered pairs (i, j) with i != j, i-major order."""
    return [(i, j) for i in range(count) for j in range(count) if i != j]


def _stacked_fields(protos: PrototypeSet) -> np.ndarray:
    """Flattened distance field per prototype, shape (N, pixels)."""
    return np.stack(
        [compute_distance_field(p).d2.ravel() for p in protos.prototypes]
    )


def _first_two_layers(
    protos: PrototypeSet, second_bias: int
) -> tuple[DenseLayer, DenseLayer]:
    n = len(protos)
    fields = _stacked_fields(protos)
    pairs = ordered_pairs(n)
    i_idx = np.array([i for i, _ in pairs])
    j_idx = np.array([j for _, j in pairs])

    # Layer 1: neuron (i, j) compares the two prototypes; fires on > 0.
    w1 = (fields[j_idx] - fields[i_idx]).astype(np.float64)
    layer1 = DenseLayer(
        w1, np.zeros(len(pairs)), np.ones(len(pairs), dtype=bool)
    )

    # Layer 2: neuron k counts its pairwise wins (pairs with first index k);
    # entries outside that pattern are exactly 0 to keep the matrix dense.
    w2 = np.zeros((n, len(pairs)))
    w2[i_idx, np.arange(len(pairs))] = 1.0
    layer2 = DenseLayer(
        w2,
        np.full(n, float(second_bias)),
        np.zeros(n, dtype=bool),  # fires on biased state >= 0
    )
    return layer1, layer2


def build_nn_network(protos: PrototypeSet) -> LayeredNetwork:
    """Three-layer nearest-neighbor network with calculated weights.

    Layer 2 certifies "nearest of all N" with bias -(N-1); layer 3 merges
    the prototypes of each class into one output that fires on > 0.
    """
    n = len(protos)
    n_pat = protos.class_count
    layer1, layer2 = _first_two_layers(protos, -(n - 1))

    w3 = np.zeros((n_pat, n))
    w3[protos.classes, np.arange(n)] = 1.0
    layer3 = DenseLayer(w3, np.zeros(n_pat), np.ones(n_pat, dtype=bool))

    shape = (protos.prototypes[0].height, protos.prototypes[0].width)
    meta = NetworkMeta(
        variant="nearest",
        n_prototypes=n,
        n_classes=n_pat,
        prototype_classes=tuple(int(c) for c in protos.classes),
        image_shape=shape,
        prototype_indices=protos.source_indices,
    )
    return LayeredNetwork([layer1, layer2, layer3], THRESHOLD, meta)


def build_knn_network(protos: PrototypeSet, s: int) -> LayeredNetwork:
    """Four-layer k-nearest-neighbors network with calculated weights.

    Layer 2's bias is relaxed to -(N-S) so up to S prototypes activate.
    Layer 3 holds one neuron per ordered class pair voting +1/-1; layer 4
    fires class k only when k wins every pairwise vote strictly.
    """
    n = len(protos)
    if not 1 <= s <= n:
        raise RangeError(f"S={s} outside [1, {n}]")
    n_pat = protos.class_count
    layer1, layer2 = _first_two_layers(protos, -(n - s))

    class_pairs = ordered_pairs(n_pat)
    w3 = np.zeros((len(class_pairs), n))
    for row, (k, k1) in enumerate(class_pairs):
        w3[row, protos.classes == k] = 1.0
        w3[row, protos.classes == k1] = -1.0
    layer3 = DenseLayer(
        w3, np.zeros(len(class_pairs)), np.ones(len(class_pairs), dtype=bool)
    )

    w4 = np.zeros((n_pat, len(class_pairs)))
    k_idx = np.array([k for k, _ in class_pairs])
    w4[k_idx, np.arange(len(class_pairs))] = 1.0
    layer4 = DenseLayer(
        w4, np.full(n_pat, -float(n_pat - 1)), np.zeros(n_pat, dtype=bool)
    )

    shape = (protos.prototypes[0].height, protos.prototypes[0].width)
    meta = NetworkMeta(
        variant="knn",
        n_prototypes=n,
        n_classes=n_pat,
        prototype_classes=tuple(int(c) for c in protos.classes),
        image_shape=shape,
        s_neighbors=s,
        prototype_indices=protos.source_indices,
    )
    return LayeredNetwork([layer1, layer2, layer3, layer4], THRESHOLD, meta)


def randomize_weights(
    net: LayeredNetwork, lo: float, hi: float, seed: int
) -> LayeredNetwork:
    """Random twin: same topology and meta, all parameters uniform in [lo, hi].

    Biases are randomized too; the trained-twin comparison needs identical
    parameter counts on both sides.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    layers = [
        DenseLayer(
            rng.uniform(lo, hi, layer.weights.shape),
            rng.uniform(lo, hi, layer.bias.shape),
            layer.strict.copy(),
        )
        for layer in net.layers
    ]
    return LayeredNetwork(layers, net.mode, net.meta)


def to_sigmoid(net: LayeredNetwork) -> LayeredNetwork:
    """Flip activation mode to sigmoid; every number stays as-is.

    Thresholds already live in the biases (w0 = -B), so nothing moves.
    No-op when the network is already in sigmoid mode.
    """
    if net.mode == SIGMOID:
        return net
    out = net.copy()
    out.mode = SIGMOID
    return out
