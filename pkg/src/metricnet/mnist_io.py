"""MNIST IDX parsing, binarization, subset slicing and prototype selection.

IDX files are big-endian: images carry magic 0x00000803 followed by counts
(n, rows, cols) and n*rows*cols unsigned bytes; labels carry magic
0x00000801, a count, and that many unsigned bytes. Parsing is strict:
truncated payloads and trailing bytes are rejected so that re-serialization
round-trips bit-exactly.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DimensionError,
    FormatError,
    RangeError,
    SelectionError,
    TruncationError,
)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

# No canonical ink threshold exists for MNIST; 127 with strict greater-than
# is the package default, overridable everywhere.
DEFAULT_BINARIZE_THRESHOLD = 127

MNIST_FILE_NAMES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass(frozen=True)
class GrayImage:
    """Row-major grid of uint8 intensities in [0, 255]."""

    pixels: np.ndarray  # shape (height, width), dtype uint8

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class BitImage:
    """Row-major grid of {0, 1} values."""

    bits: np.ndarray  # shape (height, width), dtype uint8

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def ink_count(self) -> int:
        return int(np.count_nonzero(self.bits))


@dataclass
class LabeledDataset:
    """Parallel lists of images and class labels."""

    images: list[GrayImage]
    labels: np.ndarray  # shape (n,), integer class indices
    class_count: int = 10

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.images) != len(self.labels):
            raise DimensionError(
                f"{len(self.images)} images but {len(self.labels)} labels"
            )
        if len(self.labels) and int(self.labels.max()) >= self.class_count:
            raise RangeError(
                f"label {int(self.labels.max())} >= class count {self.class_count}"
            )

    def __len__(self) -> int:
        return len(self.images)


@dataclass
class PrototypeSet:
    """Binarized standards, grouped by class, used to calculate weights."""

    prototypes: list[BitImage]
    classes: np.ndarray  # shape (N,), class index per prototype
    class_count: int
    source_indices: tuple[int, ...] | None = None  # dataset rows, for reports

    def __post_init__(self):
        self.classes = np.asarray(self.classes, dtype=np.int64)
        n = len(self.prototypes)
        if n < 2:
            raise SelectionError(f"need at least 2 prototypes, got {n}")
        if len(self.classes) != n:
            raise DimensionError("classes length != prototype count")
        present = set(int(c) for c in self.classes)
        missing = [c for c in range(self.class_count) if c not in present]
        if missing:
            raise SelectionError(f"classes without prototypes: {missing}")
        for k, proto in enumerate(self.prototypes):
            if proto.ink_count == 0:
                raise SelectionError(f"prototype {k} has no ink pixels")

    def __len__(self) -> int:
        return len(self.prototypes)


def _read_header(data: bytes, expected_magic: int, n_counts: int) -> tuple[int, ...]:
    if len(data) < 4:
        raise TruncationError(f"only {len(data)} bytes, header needs at least 4")
    (magic,) = struct.unpack_from(">I", data, 0)
    if magic != expected_magic:
        raise FormatError(
            f"magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    header_len = 4 * (1 + n_counts)
    if len(data) < header_len:
        raise TruncationError(f"header needs {header_len} bytes, got {len(data)}")
    return struct.unpack_from(f">{n_counts}I", data, 4)


def parse_idx_images(data: bytes) -> list[GrayImage]:
    """Parse an IDX image file into a list of GrayImage.

    Pixel order is preserved exactly; the returned images are read-only
    views into the input buffer.
    """
    n, rows, cols = _read_header(data, IMAGE_MAGIC, 3)
    payload = n * rows * cols
    body = len(data) - 16
    if body < payload:
        raise TruncationError(f"payload declares {payload} bytes, {body} present")
    if body > payload:
        raise FormatError(f"{body - payload} trailing bytes after payload")
    pixels = np.frombuffer(data, dtype=np.uint8, count=payload, offset=16)
    pixels = pixels.reshape(n, rows, cols)
    return [GrayImage(pixels[i]) for i in range(n)]


def parse_idx_labels(data: bytes) -> list[int]:
    """Parse an IDX label file into a list of ints in [0, 255]."""
    (n,) = _read_header(data, LABEL_MAGIC, 1)
    body = len(data) - 8
    if body < n:
        raise TruncationError(f"payload declares {n} bytes, {body} present")
    if body > n:
        raise FormatError(f"{body - n} trailing bytes after payload")
    return list(data[8 : 8 + n])


def write_idx_images(images: Sequence[GrayImage]) -> bytes:
    """Serialize images back to IDX bytes (inverse of parse_idx_images)."""
    if images:
        rows, cols = images[0].height, images[0].width
        for im in images:
            if (im.height, im.width) != (rows, cols):
                raise DimensionError("IDX images must share one size")
    else:
        rows = cols = 0
    header = struct.pack(">IIII", IMAGE_MAGIC, len(images), rows, cols)
    return header + b"".join(im.pixels.tobytes() for im in images)


def write_idx_labels(labels: Sequence[int]) -> bytes:
    """Serialize labels back to IDX bytes (inverse of parse_idx_labels)."""
    vals = list(labels)
    if any(not 0 <= v <= 255 for v in vals):
        raise RangeError("IDX labels must fit in one unsigned byte")
    return struct.pack(">II", LABEL_MAGIC, len(vals)) + bytes(vals)


def load_idx_bytes(path: str | Path) -> bytes:
    """Read an IDX file, decompressing transparently if gzipped."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def resolve_mnist_path(directory: str | Path, name: str) -> Path:
    """Find `name` or `name`.gz under directory."""
    directory = Path(directory)
    for candidate in (directory / name, directory / (name + ".gz")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{name}[.gz] not found in {directory}")


def load_dataset(
    images_path: str | Path,
    labels_path: str | Path,
    class_count: int | None = None,
) -> LabeledDataset:
    """Load an image/label file pair; class count is inferred unless given."""
    images = parse_idx_images(load_idx_bytes(images_path))
    labels = parse_idx_labels(load_idx_bytes(labels_path))
    if len(images) != len(labels):
        raise FormatError(f"{len(images)} images but {len(labels)} labels")
    if class_count is None:
        class_count = (max(labels) + 1) if labels else 1
    return LabeledDataset(images, np.array(labels), class_count)


def binarize(image: GrayImage, threshold: int = DEFAULT_BINARIZE_THRESHOLD) -> BitImage:
    """Threshold to bits: 1 iff pixel > threshold (strict)."""
    return BitImage((image.pixels > threshold).astype(np.uint8))


def take_prefix(dataset: LabeledDataset, n: int) -> LabeledDataset:
    """First n records in original order."""
    if not 0 <= n <= len(dataset):
        raise RangeError(f"prefix {n} out of range for dataset of {len(dataset)}")
    return LabeledDataset(dataset.images[:n], dataset.labels[:n], dataset.class_count)


def select_prototypes(
    dataset: LabeledDataset,
    per_class: int,
    threshold: int = DEFAULT_BINARIZE_THRESHOLD,
    seed: int = 0,
) -> PrototypeSet:
    """Draw per_class prototypes for every class, deterministically per seed.

    Images whose binarization has no ink are skipped (their distance field
    would be undefined). Output is grouped by class: all class-0 prototypes
    first, then class 1, and so on.
    """
    if per_class < 1:
        raise SelectionError("per_class must be >= 1")
    rng = np.random.default_rng(seed)
    prototypes: list[BitImage] = []
    classes: list[int] = []
    chosen: list[int] = []
    for c in range(dataset.class_count):
        usable = [
            i
            for i in np.flatnonzero(dataset.labels == c)
            if binarize(dataset.images[i], threshold).ink_count > 0
        ]
        if len(usable) < per_class:
            raise SelectionError(
                f"class {c}: {len(usable)} usable members, need {per_class}"
            )
        for k in rng.choice(len(usable), size=per_class, replace=False):
            idx = int(usable[int(k)])
            prototypes.append(binarize(dataset.images[idx], threshold))
            classes.append(c)
            chosen.append(idx)
    return PrototypeSet(
        prototypes, np.array(classes), dataset.class_count, tuple(chosen)
    )
