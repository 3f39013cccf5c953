import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import requires_mnist
from helpers import synthetic_dataset
from metricnet import (
    FormatError,
    GrayImage,
    LabeledDataset,
    RangeError,
    SelectionError,
    TruncationError,
    binarize,
    load_dataset,
    parse_idx_images,
    parse_idx_labels,
    select_prototypes,
    take_prefix,
    write_idx_images,
    write_idx_labels,
)


def image_file(n, rows, cols, payload: bytes) -> bytes:
    return struct.pack(">IIII", 0x00000803, n, rows, cols) + payload


def label_file(labels: bytes) -> bytes:
    return struct.pack(">II", 0x00000801, len(labels)) + labels


class TestParseImages:
    def test_minimal_file(self):
        images = parse_idx_images(image_file(1, 1, 1, b"\x00"))
        assert len(images) == 1
        assert images[0].width == images[0].height == 1
        assert images[0].pixels[0, 0] == 0

    def test_pixel_order_preserved(self):
        payload = bytes(range(12))
        (img,) = parse_idx_images(image_file(1, 3, 4, payload))
        assert img.pixels.shape == (3, 4)
        assert img.pixels.tobytes() == payload

    def test_label_magic_rejected(self):
        with pytest.raises(FormatError):
            parse_idx_images(label_file(b"\x01"))

    def test_truncated_payload(self):
        with pytest.raises(TruncationError):
            parse_idx_images(image_file(2, 2, 2, b"\x00" * 7))

    def test_truncated_header(self):
        with pytest.raises(TruncationError):
            parse_idx_images(struct.pack(">I", 0x00000803) + b"\x00\x00")

    def test_trailing_bytes_rejected(self):
        with pytest.raises(FormatError):
            parse_idx_images(image_file(1, 1, 1, b"\x00\x00"))


class TestParseLabels:
    def test_minimal_file(self):
        assert parse_idx_labels(label_file(b"\x07")) == [7]

    def test_image_magic_rejected(self):
        with pytest.raises(FormatError):
            parse_idx_labels(image_file(0, 0, 0, b""))

    def test_truncated_payload(self):
        with pytest.raises(TruncationError):
            parse_idx_labels(struct.pack(">II", 0x00000801, 5) + b"\x00\x01")


@requires_mnist
class TestRealFiles:
    def test_training_file_shape(self, mnist_train):
        assert len(mnist_train) == 60000
        assert mnist_train.images[0].height == 28
        assert mnist_train.images[0].width == 28

    def test_test_label_class_counts(self, mnist_test):
        assert len(mnist_test) == 10000
        counts = np.bincount(mnist_test.labels, minlength=10)
        assert counts[0] == 980
        assert counts[1] == 1135

    def test_image_round_trip_bit_exact(self, mnist_files):
        from metricnet.mnist_io import load_idx_bytes

        raw = load_idx_bytes(mnist_files["test_images"])
        assert write_idx_images(parse_idx_images(raw)) == raw

    def test_label_round_trip_bit_exact(self, mnist_files):
        from metricnet.mnist_io import load_idx_bytes

        raw = load_idx_bytes(mnist_files["test_labels"])
        assert write_idx_labels(parse_idx_labels(raw)) == raw

    def test_binarize_ink_count_matches_direct_scan(self, mnist_test):
        img = mnist_test.images[0]
        expected = sum(
            1
            for r in range(img.height)
            for c in range(img.width)
            if img.pixels[r, c] > 127
        )
        assert binarize(img, 127).ink_count == expected

    def test_take_prefix_full_is_identity(self, mnist_train):
        full = take_prefix(mnist_train, 60000)
        assert len(full) == 60000
        assert full.images[0] is mnist_train.images[0]
        assert np.array_equal(full.labels, mnist_train.labels)

    def test_take_prefix_20000(self, mnist_train):
        assert len(take_prefix(mnist_train, 20000)) == 20000


class TestBinarize:
    def test_all_zero_image(self):
        img = GrayImage(np.zeros((4, 5), dtype=np.uint8))
        assert binarize(img, 200).ink_count == 0

    def test_boundary_is_strict_greater(self):
        img = GrayImage(np.array([[128]], dtype=np.uint8))
        assert binarize(img, 127).bits[0, 0] == 1
        assert binarize(img, 128).bits[0, 0] == 0

    @given(st.integers(0, 10))
    def test_idempotent_on_binary_valued_images(self, seed):
        rng = np.random.default_rng(seed)
        pixels = rng.choice([0, 255], size=(6, 6)).astype(np.uint8)
        once = binarize(GrayImage(pixels), 127)
        again = binarize(GrayImage(once.bits * 255), 127)
        assert np.array_equal(once.bits, again.bits)


class TestTakePrefix:
    def test_zero_prefix(self):
        rng = np.random.default_rng(0)
        data = synthetic_dataset(rng, 10)
        assert len(take_prefix(data, 0)) == 0

    def test_out_of_range(self):
        rng = np.random.default_rng(0)
        data = synthetic_dataset(rng, 5)
        with pytest.raises(RangeError):
            take_prefix(data, 6)

    @given(st.integers(0, 30), st.integers(0, 30))
    @settings(max_examples=30)
    def test_composition(self, a, b):
        rng = np.random.default_rng(42)
        data = synthetic_dataset(rng, 30)
        n, m = max(a, b), min(a, b)
        direct = take_prefix(data, m)
        chained = take_prefix(take_prefix(data, n), m)
        assert np.array_equal(direct.labels, chained.labels)
        assert all(
            np.array_equal(x.pixels, y.pixels)
            for x, y in zip(direct.images, chained.images)
        )


class TestSelectPrototypes:
    @requires_mnist
    def test_thirty_prototypes_from_test_set(self, mnist_test):
        protos = select_prototypes(mnist_test, per_class=3, seed=0)
        assert len(protos) == 30
        assert protos.class_count == 10
        # grouped by class, three per class
        assert list(protos.classes) == [c for c in range(10) for _ in range(3)]

    def test_two_class_minimum(self):
        rng = np.random.default_rng(1)
        data = synthetic_dataset(rng, 12, n_classes=2)
        protos = select_prototypes(data, per_class=1, seed=0)
        assert len(protos) == 2

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(2)
        data = synthetic_dataset(rng, 40)
        a = select_prototypes(data, per_class=2, seed=7)
        b = select_prototypes(data, per_class=2, seed=7)
        assert a.source_indices == b.source_indices

    def test_insufficient_members(self):
        rng = np.random.default_rng(3)
        data = synthetic_dataset(rng, 6, n_classes=3)
        with pytest.raises(SelectionError):
            select_prototypes(data, per_class=5, seed=0)

    def test_blank_images_are_skipped(self):
        rng = np.random.default_rng(4)
        data = synthetic_dataset(rng, 20, n_classes=2)
        blank = GrayImage(np.zeros((12, 12), dtype=np.uint8))
        images = [blank if i < 3 else im for i, im in enumerate(data.images)]
        labels = data.labels.copy()
        labels[:3] = 0  # several unusable class-0 members
        data = LabeledDataset(images, labels, 2)
        protos = select_prototypes(data, per_class=2, seed=0)
        assert all(p.ink_count > 0 for p in protos.prototypes)
        assert all(i >= 3 or labels[i] != 0 for i in protos.source_indices)

    @given(st.integers(0, 200))
    @settings(max_examples=40, deadline=None)
    def test_invariants_hold_on_random_datasets(self, seed):
        rng = np.random.default_rng(seed)
        n_classes = int(rng.integers(2, 5))
        data = synthetic_dataset(rng, int(rng.integers(4 * n_classes, 60)),
                                 n_classes=n_classes)
        # keep the precondition: no class may have fewer members than asked
        smallest = int(np.bincount(data.labels, minlength=n_classes).min())
        per_class = min(int(rng.integers(1, 4)), max(1, smallest))
        protos = select_prototypes(data, per_class, seed=seed)
        # PrototypeSet's constructor enforces the invariants; check the rest.
        assert len(protos) == per_class * n_classes
        assert set(int(c) for c in protos.classes) == set(range(n_classes))
        assert len(set(protos.source_indices)) == len(protos)


class TestRoundTripSynthetic:
    @given(st.integers(0, 100))
    @settings(max_examples=25, deadline=None)
    def test_images_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        n, h, w = int(rng.integers(0, 5)), int(rng.integers(1, 8)), int(rng.integers(1, 8))
        images = [
            GrayImage(rng.integers(0, 256, (h, w)).astype(np.uint8))
            for _ in range(n)
        ]
        raw = write_idx_images(images)
        parsed = parse_idx_images(raw)
        assert write_idx_images(parsed) == raw

    @given(st.lists(st.integers(0, 255), max_size=50))
    def test_labels_round_trip(self, labels):
        raw = write_idx_labels(labels)
        assert parse_idx_labels(raw) == labels
        assert write_idx_labels(parse_idx_labels(raw)) == raw


def test_load_dataset_count_mismatch(tmp_path):
    (tmp_path / "imgs").write_bytes(image_file(2, 1, 1, b"\x00\x01"))
    (tmp_path / "labs").write_bytes(label_file(b"\x01"))
    with pytest.raises(FormatError):
        load_dataset(tmp_path / "imgs", tmp_path / "labs")
