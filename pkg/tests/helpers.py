"""Shared test utilities: independent oracles and synthetic data builders."""

from __future__ import annotations

import numpy as np

from metricnet import BitImage, GrayImage, LabeledDataset, PrototypeSet
from metricnet.inference import forward_vector
from metricnet.network_builder import SIGMOID, DenseLayer, LayeredNetwork, NetworkMeta
from metricnet.trainer import loss


def bf_field(bits: np.ndarray) -> np.ndarray:
    """Reference squared-distance field: per-cell minimum over all ink pixels.

    Deliberately written as a direct min-reduction so it shares no code with
    the two-pass transform it is used to check.
    """
    bits = np.asarray(bits)
    h, w = bits.shape
    ink_r, ink_c = np.nonzero(bits)
    assert len(ink_r) > 0, "reference field needs ink"
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    flat_r = rr.reshape(-1, 1).astype(np.int64)
    flat_c = cc.reshape(-1, 1).astype(np.int64)
    d2 = (flat_r - ink_r) ** 2 + (flat_c - ink_c) ** 2
    return d2.min(axis=1).reshape(h, w)


def random_bit_image(rng: np.random.Generator, h: int, w: int, p: float = 0.3) -> BitImage:
    """Random bit image with at least one ink pixel."""
    while True:
        bits = (rng.random((h, w)) < p).astype(np.uint8)
        if bits.any():
            return BitImage(bits)


def random_prototype_set(
    rng: np.random.Generator,
    h: int = 16,
    w: int = 16,
    n: int | None = None,
    n_classes: int | None = None,
) -> PrototypeSet:
    """Random prototypes with every class represented at least once."""
    if n_classes is None:
        n_classes = int(rng.integers(2, 5))  # 2..4
    if n is None:
        n = int(rng.integers(max(2, n_classes), 13))  # up to 12
    assert n >= n_classes
    classes = np.arange(n) % n_classes
    protos = [random_bit_image(rng, h, w) for _ in range(n)]
    return PrototypeSet(protos, classes, n_classes)


def full_scale_prototypes(seed: int = 0) -> PrototypeSet:
    """30 random 28x28 prototypes, 3 per class over 10 classes."""
    rng = np.random.default_rng(seed)
    protos = [random_bit_image(rng, 28, 28) for _ in range(30)]
    classes = np.repeat(np.arange(10), 3)
    return PrototypeSet(protos, classes, 10)


def toy_3x3_prototypes() -> PrototypeSet:
    """Fixed 4-prototype / 2-class set on a 3x3 grid."""
    grids = [
        [[1, 0, 0], [0, 0, 0], [0, 0, 0]],
        [[0, 0, 1], [0, 1, 0], [0, 0, 0]],
        [[0, 0, 0], [0, 0, 0], [1, 1, 0]],
        [[0, 0, 0], [0, 0, 1], [0, 0, 1]],
    ]
    protos = [BitImage(np.array(g, dtype=np.uint8)) for g in grids]
    return PrototypeSet(protos, np.array([0, 0, 1, 1]), 2)


def all_3x3_inputs() -> list[BitImage]:
    """All 512 binary 3x3 images, including the all-zero one."""
    out = []
    for code in range(512):
        bits = np.array(
            [(code >> k) & 1 for k in range(9)], dtype=np.uint8
        ).reshape(3, 3)
        out.append(BitImage(bits))
    return out


def synthetic_dataset(
    rng: np.random.Generator,
    n: int,
    h: int = 12,
    w: int = 12,
    n_classes: int = 3,
) -> LabeledDataset:
    """Grayscale dataset with a bright class-specific blob plus speckle noise.

    Every image binarizes to at least one ink pixel and every class occurs,
    so prototype selection and training behave like the real data at toy
    scale.
    """
    labels = np.concatenate(
        [np.arange(n_classes), rng.integers(0, n_classes, max(0, n - n_classes))]
    )[:n]
    rng.shuffle(labels)
    images = []
    for lab in labels:
        img = np.zeros((h, w), dtype=np.uint8)
        speckle = rng.random((h, w)) < 0.06
        img[speckle] = rng.integers(1, 256, int(speckle.sum()))
        # blob position wraps into bounds so at least one bright pixel lands
        r0 = (1 + 3 * (int(lab) % 3)) % max(1, h - 1)
        c0 = (1 + 3 * (int(lab) // 3)) % max(1, w - 1)
        block = img[r0 : r0 + 3, c0 : c0 + 3]
        block[:] = rng.integers(180, 256, block.shape)
        images.append(GrayImage(img))
    return LabeledDataset(images, labels, n_classes)


def random_sigmoid_net(rng: np.random.Generator, sizes: list[int]) -> LayeredNetwork:
    """Plain random sigmoid MLP with the given layer widths."""
    layers = [
        DenseLayer(
            rng.uniform(-0.5, 0.5, (n_out, n_in)),
            rng.uniform(-0.5, 0.5, n_out),
            np.ones(n_out, dtype=bool),
        )
        for n_in, n_out in zip(sizes, sizes[1:])
    ]
    meta = NetworkMeta(
        variant="nearest",
        n_prototypes=2,
        n_classes=sizes[-1],
        prototype_classes=(0, 1),
        image_shape=(1, sizes[0]),
    )
    return LayeredNetwork(layers, SIGMOID, meta)


def flat_params(net: LayeredNetwork) -> np.ndarray:
    return np.concatenate(
        [np.concatenate([l.weights.ravel(), l.bias]) for l in net.layers]
    )


def numeric_gradient(net, x: BitImage, label: int, cfg, eps: float = 1e-5) -> np.ndarray:
    """Central finite differences of the sample loss over every parameter."""
    a0 = x.bits.ravel().astype(np.float64)

    def loss_now():
        return loss(forward_vector(net, a0).outputs[-1], label, cfg)

    grads = []
    for layer in net.layers:
        for arr in (layer.weights, layer.bias):
            flat = arr.ravel()
            g = np.empty_like(flat)
            for k in range(len(flat)):
                orig = flat[k]
                flat[k] = orig + eps
                up = loss_now()
                flat[k] = orig - eps
                down = loss_now()
                flat[k] = orig
                g[k] = (up - down) / (2 * eps)
            grads.append(g)
    return np.concatenate(grads)
