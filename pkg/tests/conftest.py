import struct

import numpy as np
import pytest

from geneotda.datasets import find_mnist
from geneotda.image import GrayImage


@pytest.fixture(scope="session")
def mnist_paths():
    paths = find_mnist()
    if paths is None:
        pytest.skip(
            "MNIST IDX files not available (set GENEOTDA_MNIST_DIR; this sandbox "
            "has no dataset on disk and no network egress to fetch one)"
        )
    return paths


def random_image(rng, width, height, lo=0.0, hi=255.0) -> GrayImage:
    return GrayImage(rng.uniform(lo, hi, size=(height, width)))


def random_int_image(rng, width, height, lo=0, hi=9) -> GrayImage:
    return GrayImage(rng.integers(lo, hi + 1, size=(height, width)).astype(float))


def idx_image_bytes(frames, rows, cols, magic=2051) -> bytes:
    header = struct.pack(">IIII", magic, len(frames), rows, cols)
    return header + b"".join(bytes(f) for f in frames)


def idx_label_bytes(labels, magic=2049) -> bytes:
    return struct.pack(">II", magic, len(labels)) + bytes(labels)


def disk_image(rng, size=12) -> GrayImage:
    """A filled bright blob on dark background, with mild jitter."""
    cy = size / 2 + rng.uniform(-1, 1)
    cx = size / 2 + rng.uniform(-1, 1)
    radius = size / 3 + rng.uniform(-0.5, 0.5)
    yy, xx = np.mgrid[0:size, 0:size]
    dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
    pixels = np.where(dist <= radius, 255.0, 0.0)
    pixels += rng.uniform(0, 8, pixels.shape)
    return GrayImage(np.clip(pixels, 0, 255))


def ring_image(rng, size=12) -> GrayImage:
    """A bright annulus (one hole) on dark background, with mild jitter."""
    cy = size / 2 + rng.uniform(-1, 1)
    cx = size / 2 + rng.uniform(-1, 1)
    outer = size / 2.4 + rng.uniform(-0.5, 0.5)
    inner = outer - 2.2
    yy, xx = np.mgrid[0:size, 0:size]
    dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
    pixels = np.where((dist <= outer) & (dist >= inner), 255.0, 0.0)
    pixels += rng.uniform(0, 8, pixels.shape)
    return GrayImage(np.clip(pixels, 0, 255))


def synthetic_idx_dataset(tmp_path, n_train=10, n_test=4, size=12, seed=0):
    """Write a tiny MNIST-like IDX directory: label 0 = disk, label 1 = ring."""
    rng = np.random.default_rng(seed)

    def build(n):
        frames, labels = [], []
        for i in range(n):
            img = disk_image(rng, size) if i % 2 == 0 else ring_image(rng, size)
            frames.append(np.rint(img.pixels).astype(np.uint8).reshape(-1).tolist())
            labels.append(i % 2)
        return frames, labels

    root = tmp_path / "mnist"
    root.mkdir()
    train_frames, train_labels = build(2 * n_train)
    test_frames, test_labels = build(2 * n_test)
    (root / "train-images-idx3-ubyte").write_bytes(idx_image_bytes(train_frames, size, size))
    (root / "train-labels-idx1-ubyte").write_bytes(idx_label_bytes(train_labels))
    (root / "t10k-images-idx3-ubyte").write_bytes(idx_image_bytes(test_frames, size, size))
    (root / "t10k-labels-idx1-ubyte").write_bytes(idx_label_bytes(test_labels))
    return root
