"""Exact squared Euclidean distance fields and first-layer weight tables.

Every cell of a distance field holds the squared distance to the nearest
ink pixel of one image, as an exact integer. The weight table comparing
prototypes i and j is the cell-wise difference of their two fields, chosen
so the first-layer neuron (i, j) ends up with a positive state exactly when
the input is nearer prototype i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyImageError
from .mnist_io import BitImage


@dataclass(frozen=True)
class DistanceField:
    """Per-cell squared distance to the nearest ink pixel of one image."""

    d2: np.ndarray  # shape (height, width), dtype int64

    @property
    def height(self) -> int:
        return self.d2.shape[0]

    @property
    def width(self) -> int:
        return self.d2.shape[1]


@dataclass(frozen=True)
class WeightTable:
    """First-layer weights for one ordered prototype pair (i, j)."""

    w: np.ndarray  # shape (height, width), dtype int64
    pair: tuple[int, int]


def compute_distance_field(image: BitImage) -> DistanceField:
    """Exact integer squared Euclidean distance transform.

    Two-pass decomposition: a vertical sweep finds, per cell, the row
    distance to the nearest ink pixel in its own column; a horizontal
    min-reduction then combines columns. Both passes are exact, so the
    result matches a brute-force minimum over all ink pixels cell for cell.
    """
    bits = np.asarray(image.bits)
    if bits.size == 0 or not bits.any():
        raise EmptyImageError("distance field needs at least one ink pixel")
    h, w = bits.shape
    big = h + w  # exceeds any axis-aligned distance; big^2 exceeds any d2

    g = np.where(bits != 0, 0, big).astype(np.int64)
    for r in range(1, h):
        np.minimum(g[r], g[r - 1] + 1, out=g[r])
    for r in range(h - 2, -1, -1):
        np.minimum(g[r], g[r + 1] + 1, out=g[r])
    g2 = g * g

    cols = np.arange(w, dtype=np.int64)
    span = (cols[:, None] - cols[None, :]) ** 2  # span[c, c'] = (c - c')^2
    d2 = (g2[:, None, :] + span[None, :, :]).min(axis=2)
    return DistanceField(d2)


def build_weight_table(
    di: DistanceField, dj: DistanceField, pair: tuple[int, int]
) -> WeightTable:
    """Weight table for neuron (i, j): w = dj.d2 - di.d2 cell-wise.

    Positive where the cell is nearer prototype i's ink, so an input with
    ink there pushes the neuron's state up. Swapping arguments negates the
    table.
    """
    if di.d2.shape != dj.d2.shape:
        raise DimensionError(
            f"distance fields {di.d2.shape} vs {dj.d2.shape} differ in size"
        )
    return WeightTable(dj.d2 - di.d2, (int(pair[0]), int(pair[1])))


def format_weight_table(table: WeightTable) -> str:
    """Debug dump: aligned grid of signed integers, one row per image row."""
    cells = [[str(int(v)) for v in row] for row in table.w]
    width = max((len(s) for row in cells for s in row), default=1)
    lines = [" ".join(s.rjust(width) for s in row) for row in cells]
    return "\n".join(lines)
