"""Content-hash cache for per-image feature vectors.

Keys cover the featurizer parameters and the exact pixel bytes, so a cache
hit is only possible for a bitwise-identical computation.  Stored rows
carry their own digest; a mismatch on load means on-disk corruption and is
reported rather than silently recomputed.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .image import GrayImage


class CacheCorruptionError(RuntimeError):
    """A cached entry failed its content-hash check."""


def params_key(featurizer) -> str:
    items = sorted(featurizer.get_params().items())
    blob = type(featurizer).__name__ + repr(items)
    return hashlib.sha256(blob.encode()).hexdigest()


def image_key(params: str, image: GrayImage) -> str:
    h = hashlib.sha256()
    h.update(params.encode())
    h.update(str(image.pixels.shape).encode())
    h.update(image.pixels.tobytes())
    return h.hexdigest()


class FeatureCache:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.npz"

    def get(self, key: str) -> np.ndarray | None:
        path = self._path(key)
        if not path.is_file():
            return None
        with np.load(path) as data:
            values = data["values"]
            stored = str(data["digest"])
        actual = hashlib.sha256(values.tobytes()).hexdigest()
        if actual != stored:
            raise CacheCorruptionError(f"digest mismatch for cache entry {path}")
        return values

    def put(self, key: str, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        digest = hashlib.sha256(values.tobytes()).hexdigest()
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, values=values, digest=np.array(digest))
        tmp.replace(path)


def cached_features(featurizer, images, cache: FeatureCache | None) -> np.ndarray:
    """featurizer.transform with a per-image read-through cache."""
    if cache is None:
        return featurizer.transform(images)
    params = params_key(featurizer)
    keys = [image_key(params, img) for img in images]
    rows: list[np.ndarray | None] = [cache.get(k) for k in keys]
    missing = [i for i, row in enumerate(rows) if row is None]
    if missing:
        computed = featurizer.transform([images[i] for i in missing])
        for i, row in zip(missing, computed):
            cache.put(keys[i], row)
            rows[i] = row
    return np.vstack(rows)
