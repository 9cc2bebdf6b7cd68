"""Locate and load MNIST-style IDX datasets from disk."""

from __future__ import annotations

import os
from pathlib import Path

from .image import GrayImage, load_idx_images, load_idx_labels

MNIST_ENV_VAR = "GENEOTDA_MNIST_DIR"

_FILE_CANDIDATES = {
    "train_images": ("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
    "train_labels": ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"),
    "test_images": ("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"),
    "test_labels": ("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"),
}


def find_mnist(root=None) -> dict[str, Path] | None:
    """Find the four IDX files under ``root``, $GENEOTDA_MNIST_DIR, ./mnist,
    or ./data/mnist (plain or .gz).  Returns None when not all are present."""
    roots = []
    if root is not None:
        roots.append(Path(root))
    env = os.environ.get(MNIST_ENV_VAR)
    if env:
        roots.append(Path(env))
    roots += [Path("mnist"), Path("data") / "mnist"]
    for base in roots:
        found = {}
        for key, names in _FILE_CANDIDATES.items():
            for name in names:
                for suffix in ("", ".gz"):
                    candidate = base / (name + suffix)
                    if candidate.is_file():
                        found[key] = candidate
                        break
                if key in found:
                    break
        if len(found) == len(_FILE_CANDIDATES):
            return found
    return None


def load_split(paths: dict[str, Path], split: str) -> tuple[list[GrayImage], list[int]]:
    """Load ("train" or "test") images and labels; counts must agree."""
    images = load_idx_images(paths[f"{split}_images"])
    labels = load_idx_labels(paths[f"{split}_labels"])
    if len(images) != len(labels):
        raise ValueError(f"{split}: {len(images)} images but {len(labels)} labels")
    return images, labels


def first_n_per_class(
    images: list[GrayImage], labels: list[int], classes, n: int
) -> dict[int, list[GrayImage]]:
    """First n images of each requested class, in order of appearance."""
    out: dict[int, list[GrayImage]] = {int(c): [] for c in classes}
    for img, label in zip(images, labels):
        bucket = out.get(int(label))
        if bucket is not None and len(bucket) < n:
            bucket.append(img)
        if all(len(v) >= n for v in out.values()):
            break
    for c, bucket in out.items():
        if len(bucket) < n:
            raise ValueError(f"class {c} has only {len(bucket)} samples, need {n}")
    return out
