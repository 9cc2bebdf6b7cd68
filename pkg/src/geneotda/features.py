"""Fixed-length feature vectors from diagrams (persistence images) and
landscapes (flattened grids)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .landscapes import Landscape
from .persistence import PersistenceDiagram

SQRT2 = math.sqrt(2.0)


@dataclass
class FeatureVector:
    values: np.ndarray
    homology: str = ""  # "H0" | "H1" | "H0+H1"
    method: str = ""    # "landscape" | "persistence-image"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature vector entries must be finite")

    def __len__(self):
        return len(self.values)


def _normal_cdf(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.vectorize(math.erf)(z / SQRT2))


def persistence_image(
    diagram: PersistenceDiagram,
    dim: int,
    resolution: int = 5,
    sigma: float = 1.0,
    value_range: tuple[float, float] = (0.0, 256.0),
) -> FeatureVector:
    """Weighted Gaussian rasterization of a diagram's dim-d points.

    Points become (birth, persistence) with infinite deaths clamped to the
    range top; each point weighs linearly in persistence (0 at persistence
    0, 1 at the full range span) and spreads an isotropic Gaussian of std
    ``sigma`` whose mass is integrated exactly over each of the
    resolution x resolution cells covering range^2.  Flattened row-major
    with the birth axis first: index = birth_cell * resolution + pers_cell.
    """
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    lo, hi = value_range
    if not lo < hi:
        raise ValueError(f"need range lo < hi, got {value_range}")
    span = hi - lo
    edges = lo + span * np.arange(resolution + 1) / resolution
    img = np.zeros((resolution, resolution))
    for p in diagram.in_dim(dim):
        death = min(p.death, hi)
        pers = death - p.birth
        weight = min(max(pers / span, 0.0), 1.0)
        if weight == 0.0:
            continue
        mass_b = np.diff(_normal_cdf((edges - p.birth) / sigma))
        mass_p = np.diff(_normal_cdf((edges - pers) / sigma))
        img += weight * np.outer(mass_b, mass_p)
    return FeatureVector(img.reshape(-1), homology=f"H{dim}", method="persistence-image")


def landscape_vector(l: Landscape, homology: str = "") -> FeatureVector:
    """Flatten lambda(k, ix, iy) in (k, row-major) order."""
    return FeatureVector(l.values.reshape(-1), homology=homology, method="landscape")


def concat(features: list[FeatureVector]) -> FeatureVector:
    """Concatenate feature vectors in argument order."""
    if not features:
        raise ValueError("cannot concatenate an empty feature list")
    values = np.concatenate([f.values for f in features])
    homology = "+".join(f.homology for f in features if f.homology)
    methods = {f.method for f in features if f.method}
    method = methods.pop() if len(methods) == 1 else "mixed"
    return FeatureVector(values, homology=homology, method=method)


def write_features_csv(fh, labels, vectors: np.ndarray) -> None:
    """One row per sample: the label first, then the feature entries."""
    vectors = np.asarray(vectors)
    if len(labels) != vectors.shape[0]:
        raise ValueError("one label per feature row required")
    fh.write("label," + ",".join(f"f{i}" for i in range(vectors.shape[1])) + "\n")
    for label, row in zip(labels, vectors):
        fh.write(str(int(label)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def read_features_csv(fh) -> tuple[np.ndarray, np.ndarray]:
    header = fh.readline().strip().split(",")
    if not header or header[0] != "label":
        raise ValueError("feature CSV must start with a 'label' column")
    labels = []
    rows = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        labels.append(int(parts[0]))
        rows.append([float(v) for v in parts[1:]])
    return np.array(labels, dtype=np.int64), np.array(rows, dtype=np.float64)
