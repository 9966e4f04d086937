"""MNIST IDX ingestion, normalization and deterministic shuffling."""

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


def _read_file(path):
    # Gzip-compressed inputs are detected by the 2-byte 0x1f 0x8b prefix.
    with open(path, "rb") as f:
        head = f.read(2)
        f.seek(0)
        if head == b"\x1f\x8b":
            with gzip.open(f) as g:
                return g.read()
        return f.read()


def _read_be32(data, offset, field_name, path):
    if len(data) < offset + 4:
        raise DataFormatError(f"{path}: short read at {field_name}")
    return struct.unpack_from(">i", data, offset)[0]


def load_idx_images(path):
    """Parse a big-endian IDX image file into a (count, rows, cols) uint8 array."""
    data = _read_file(path)
    magic = _read_be32(data, 0, "magic", path)
    if magic != IMAGE_MAGIC:
        raise DataFormatError(f"{path}: bad image magic {magic}, expected {IMAGE_MAGIC}")
    count = _read_be32(data, 4, "item count", path)
    rows = _read_be32(data, 8, "row count", path)
    cols = _read_be32(data, 12, "column count", path)
    if count < 0 or rows <= 0 or cols <= 0:
        raise DataFormatError(f"{path}: nonsensical dimensions {count}x{rows}x{cols}")
    expected = count * rows * cols
    payload = data[16:]
    if len(payload) != expected:
        raise DataFormatError(
            f"{path}: pixel payload holds {len(payload)} bytes, dimensions require {expected}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols)


def load_idx_labels(path):
    """Parse a big-endian IDX label file into a (count,) uint8 array."""
    data = _read_file(path)
    magic = _read_be32(data, 0, "magic", path)
    if magic != LABEL_MAGIC:
        raise DataFormatError(f"{path}: bad label magic {magic}, expected {LABEL_MAGIC}")
    count = _read_be32(data, 4, "item count", path)
    payload = data[8:]
    if len(payload) != count:
        raise DataFormatError(f"{path}: label payload holds {len(payload)} bytes, count says {count}")
    labels = np.frombuffer(payload, dtype=np.uint8)
    if labels.size and labels.max() > 9:
        bad = int(labels.max())
        raise DataFormatError(f"{path}: label byte {bad} out of range [0, 9]")
    return labels


@dataclass(frozen=True)
class Dataset:
    """Flattened images normalized to [0, 1] with their class labels."""

    images: np.ndarray  # (count, pixels) float64 in [0, 1]
    labels: np.ndarray  # (count,) int64 in [0, 9]

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise DataFormatError(
                f"image count {self.images.shape[0]} != label count {self.labels.shape[0]}"
            )

    def __len__(self):
        return self.images.shape[0]

    def subset(self, limit):
        if limit is None or limit >= len(self):
            return self
        return Dataset(self.images[:limit], self.labels[:limit])


def normalize(raw_images):
    """uint8 pixel tensor -> flattened float vectors in [0, 1] (divide by 255)."""
    flat = raw_images.reshape(raw_images.shape[0], -1)
    return flat.astype(np.float64) / 255.0


def denormalize(images):
    """Inverse of normalize; reproduces the source bytes exactly."""
    return np.round(images * 255.0).astype(np.uint8)


def load_dataset(images_path, labels_path):
    raw = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if raw.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"image count {raw.shape[0]} != label count {labels.shape[0]} "
            f"({images_path} / {labels_path})"
        )
    return Dataset(normalize(raw), labels.astype(np.int64))


def shuffled_indices(count, seed, epoch):
    """Deterministic permutation of range(count) as a function of (seed, epoch)."""
    if count <= 0:
        raise ValueError(f"count must be positive, got {count}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1, int(epoch)]))
    return rng.permutation(count)
