import os
from pathlib import Path

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]

MNIST_FILES = (
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
)


def mnist_dir():
    """MNIST directory from $SPIKEGRAD_DATA_DIR or <repo>/data/mnist, else None."""
    candidates = []
    env = os.environ.get("SPIKEGRAD_DATA_DIR")
    if env:
        candidates.append(Path(env))
    candidates.append(REPO_ROOT / "data" / "mnist")
    for d in candidates:
        if d.is_dir() and all((d / f).exists() for f in MNIST_FILES):
            return d
    return None


@pytest.fixture(scope="session")
def mnist_path():
    d = mnist_dir()
    if d is None:
        pytest.skip("MNIST IDX files not found (set SPIKEGRAD_DATA_DIR or populate data/mnist)")
    return d


@pytest.fixture(scope="session")
def mnist_train(mnist_path):
    from spikegrad.data import load_dataset

    return load_dataset(mnist_path / MNIST_FILES[0], mnist_path / MNIST_FILES[1])


@pytest.fixture(scope="session")
def mnist_test(mnist_path):
    from spikegrad.data import load_dataset

    return load_dataset(mnist_path / MNIST_FILES[2], mnist_path / MNIST_FILES[3])


def write_idx_images(path, array):
    import struct

    array = np.asarray(array, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">4i", 2051, *array.shape))
        f.write(array.tobytes())


def write_idx_labels(path, labels):
    import struct

    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">2i", 2049, labels.size))
        f.write(labels.tobytes())


@pytest.fixture
def synthetic_idx_dir(tmp_path):
    """Tiny MNIST-shaped IDX files for fast CLI runs."""
    rng = np.random.default_rng(99)
    d = tmp_path / "idxdata"
    d.mkdir()
    train_images = (rng.random((40, 28, 28)) < 0.2) * rng.integers(120, 256, size=(40, 28, 28))
    test_images = (rng.random((20, 28, 28)) < 0.2) * rng.integers(120, 256, size=(20, 28, 28))
    write_idx_images(d / "train-images-idx3-ubyte", train_images)
    write_idx_labels(d / "train-labels-idx1-ubyte", rng.integers(0, 10, size=40))
    write_idx_images(d / "t10k-images-idx3-ubyte", test_images)
    write_idx_labels(d / "t10k-labels-idx1-ubyte", rng.integers(0, 10, size=20))
    return d


def synthetic_dataset(count, n_pixels=784, n_classes=10, seed=1234, density=0.15):
    """Sparse random images with labels, shaped like flattened MNIST."""
    from spikegrad.data import Dataset

    rng = np.random.default_rng(seed)
    images = np.zeros((count, n_pixels))
    for i in range(count):
        on = rng.choice(n_pixels, size=int(density * n_pixels), replace=False)
        images[i, on] = rng.uniform(0.3, 1.0, size=on.size)
    labels = rng.integers(0, n_classes, size=count)
    return Dataset(images, labels)
