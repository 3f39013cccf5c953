"""Brute-force reference classifiers the constructed networks must match.

Everything here is computed straight from prototype geometry with a
per-cell minimum over all ink pixels, never through the layered network,
so agreement between `classify` and these functions is meaningful. All
arithmetic is integer and exact.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, EmptyImageError, RangeError
from .inference import REJECTED
from .mnist_io import BitImage, PrototypeSet


def brute_force_distance_field(image: BitImage) -> np.ndarray:
    """Per-cell min over all ink pixels of the squared Euclidean distance."""
    bits = np.asarray(image.bits)
    ink = np.argwhere(bits != 0)
    if len(ink) == 0:
        raise EmptyImageError("distance field needs at least one ink pixel")
    h, w = bits.shape
    rows = np.arange(h, dtype=np.int64)[:, None, None]
    cols = np.arange(w, dtype=np.int64)[None, :, None]
    d2 = (rows - ink[:, 0]) ** 2 + (cols - ink[:, 1]) ** 2
    return d2.min(axis=2)


def prototype_fields(protos: PrototypeSet) -> np.ndarray:
    """Stacked flattened brute-force fields, shape (N, pixels)."""
    return np.stack(
        [brute_force_distance_field(p).ravel() for p in protos.prototypes]
    )


def chamfer_scores(
    protos: PrototypeSet, x: BitImage, fields: np.ndarray | None = None
) -> np.ndarray:
    """D_k per prototype: sum of prototype k's field over x's ink cells.

    By construction the network's first-layer state for neuron (i, j)
    equals D_j - D_i exactly. Pass precomputed `fields` when scoring many
    inputs against one prototype set.
    """
    ref = protos.prototypes[0]
    if (x.height, x.width) != (ref.height, ref.width):
        raise DimensionError(
            f"input {x.height}x{x.width} vs prototypes {ref.height}x{ref.width}"
        )
    if fields is None:
        fields = prototype_fields(protos)
    return fields @ x.bits.ravel().astype(np.int64)


def nn_oracle(
    protos: PrototypeSet, x: BitImage, fields: np.ndarray | None = None
):
    """Class of the unique nearest prototype; ties for the minimum reject."""
    scores = chamfer_scores(protos, x, fields)
    nearest = np.flatnonzero(scores == scores.min())
    if len(nearest) == 1:
        return int(protos.classes[nearest[0]])
    return REJECTED


def knn_oracle(
    protos: PrototypeSet, x: BitImage, s: int, fields: np.ndarray | None = None
):
    """Pairwise-vote k-NN decision mirroring the four-layer network's algebra.

    A prototype is active when it strictly beats at least N - S others;
    the winning class must strictly out-vote every other class.
    """
    n = len(protos)
    if not 1 <= s <= n:
        raise RangeError(f"S={s} outside [1, {n}]")
    scores = chamfer_scores(protos, x, fields)
    wins = (scores[:, None] < scores[None, :]).sum(axis=1)
    active = wins >= n - s
    votes = np.bincount(protos.classes[active], minlength=protos.class_count)
    top = votes.max()
    winners = np.flatnonzero(votes == top)
    if len(winners) == 1:
        return int(winners[0])
    return REJECTED
