import gzip
import struct

import numpy as np
import pytest

from spikegrad.data import (
    denormalize,
    load_dataset,
    load_idx_images,
    load_idx_labels,
    normalize,
    shuffled_indices,
)
from spikegrad.errors import DataFormatError

from conftest import write_idx_images, write_idx_labels


@pytest.fixture
def idx_pair(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(12, 28, 28)).astype(np.uint8)
    labels = rng.integers(0, 10, size=12).astype(np.uint8)
    ip, lp = tmp_path / "imgs", tmp_path / "lbls"
    write_idx_images(ip, images)
    write_idx_labels(lp, labels)
    return ip, lp, images, labels


class TestIdxParsing:
    def test_round_trip(self, idx_pair):
        ip, lp, images, labels = idx_pair
        assert np.array_equal(load_idx_images(ip), images)
        assert np.array_equal(load_idx_labels(lp), labels)

    def test_gzip_detection(self, tmp_path, idx_pair):
        ip, _, images, _ = idx_pair
        gz = tmp_path / "imgs.gz"
        gz.write_bytes(gzip.compress(ip.read_bytes()))
        assert np.array_equal(load_idx_images(gz), images)

    def test_empty_file_short_read(self, tmp_path):
        p = tmp_path / "empty"
        p.write_bytes(b"")
        with pytest.raises(DataFormatError, match="magic"):
            load_idx_images(p)

    def test_wrong_magic(self, tmp_path):
        p = tmp_path / "bad"
        p.write_bytes(struct.pack(">4i", 2052, 1, 2, 2) + b"\x00" * 4)
        with pytest.raises(DataFormatError, match="magic"):
            load_idx_images(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "short"
        p.write_bytes(struct.pack(">4i", 2051, 2, 3, 3) + b"\x00" * 10)
        with pytest.raises(DataFormatError, match="payload"):
            load_idx_images(p)

    def test_label_out_of_range(self, tmp_path):
        p = tmp_path / "lbl"
        p.write_bytes(struct.pack(">2i", 2049, 3) + bytes([1, 12, 3]))
        with pytest.raises(DataFormatError, match="12"):
            load_idx_labels(p)

    def test_count_mismatch_between_files(self, tmp_path, idx_pair):
        ip, _, _, _ = idx_pair
        lp = tmp_path / "three"
        write_idx_labels(lp, [1, 2, 3])
        with pytest.raises(DataFormatError, match="count"):
            load_dataset(ip, lp)


class TestNormalization:
    def test_round_trip_exact(self):
        raw = np.arange(256, dtype=np.uint8).reshape(1, 16, 16)
        assert np.array_equal(denormalize(normalize(raw)), raw.reshape(1, -1))

    def test_range(self, idx_pair):
        ip, lp, _, _ = idx_pair
        ds = load_dataset(ip, lp)
        assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0

    def test_subset(self, idx_pair):
        ip, lp, _, _ = idx_pair
        ds = load_dataset(ip, lp)
        assert len(ds.subset(5)) == 5
        assert len(ds.subset(None)) == len(ds)
        assert len(ds.subset(999)) == len(ds)


class TestShuffledIndices:
    def test_singleton(self):
        assert list(shuffled_indices(1, 0, 0)) == [0]

    def test_deterministic(self):
        a = shuffled_indices(100, seed=7, epoch=3)
        b = shuffled_indices(100, seed=7, epoch=3)
        assert np.array_equal(a, b)

    def test_epochs_differ(self):
        a = shuffled_indices(100, seed=7, epoch=0)
        b = shuffled_indices(100, seed=7, epoch=1)
        assert not np.array_equal(a, b)

    def test_valid_permutation_many_counts(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            count = int(rng.integers(1, 300))
            perm = shuffled_indices(count, int(rng.integers(0, 2**32)), int(rng.integers(0, 50)))
            assert sorted(perm) == list(range(count))

    def test_count_validation(self):
        with pytest.raises(ValueError):
            shuffled_indices(0, 0, 0)


class TestMnistFiles:
    def test_train_shape_and_first_labels(self, mnist_train):
        assert len(mnist_train) == 60000
        assert mnist_train.images.shape == (60000, 784)
        # canonical leading labels of the training split
        assert list(mnist_train.labels[:5]) == [5, 0, 4, 1, 9]

    def test_test_shape(self, mnist_test):
        assert len(mnist_test) == 10000
        assert list(mnist_test.labels[:5]) == [7, 2, 1, 0, 4]

    def test_dataset_invariants(self, mnist_train):
        assert mnist_train.images.min() >= 0.0 and mnist_train.images.max() == 1.0
        assert mnist_train.labels.min() >= 0 and mnist_train.labels.max() <= 9
