"""Image-to-feature transformers and the stability harness.

The featurizers are stateless scikit-learn transformers (fit returns self),
so topological features compose with sklearn pipelines:

    make_pipeline(LandscapeFeaturizer(bank="mix-geneo"), PCA(), LDA())
"""

from __future__ import annotations

import math

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin

from .complexes import build_bifiltration, coarsen_bifiltration
from .complexes import lower_star_filtration, upper_star_filtration
from .features import persistence_image
from .image import GrayImage, as_gray_images, sup_distance
from .landscapes import GridSpec, Landscape, landscape_distance, landscapes
from .operators import DGeneo, OperatorBank, default_bank
from .persistence import compute_persistence, swap_for_upper_star

_HOMOLOGY_DIMS = {"h0": (0,), "h1": (1,), "both": (0, 1)}


def _resolve_bank(bank) -> OperatorBank:
    if isinstance(bank, OperatorBank):
        return bank
    return default_bank(bank)


def _resolve_dims(homology: str) -> tuple[int, ...]:
    try:
        return _HOMOLOGY_DIMS[homology.lower()]
    except KeyError:
        raise ValueError(f"homology must be one of {tuple(_HOMOLOGY_DIMS)}, got {homology!r}")


def _landscape_row(image, bank, bins, grid, k_max, dims, triangle_rule) -> np.ndarray:
    b = build_bifiltration(image, bank, triangle_rule)
    if bins is not None:
        b = coarsen_bifiltration(b, bins)
    ls = landscapes(b, dims, k_max, grid)
    return np.concatenate([ls[d].values.reshape(-1) for d in dims])


class LandscapeFeaturizer(BaseEstimator, TransformerMixin):
    """Images -> flattened multiparameter landscape vectors.

    One bifiltration per image (two-operator bank, optional grade
    coarsening into ``bins`` cells per axis), then lambda(k, x) sampled on
    the grid for the selected homology dimensions, concatenated H0-then-H1
    when homology="both".
    """

    def __init__(
        self,
        bank="mix-geneo",
        bins=10,
        lo=(0.0, 0.0),
        hi=(260.0, 260.0),
        step=10.0,
        k_max=1,
        homology="both",
        triangle_rule="square-max",
        n_jobs=None,
    ):
        self.bank = bank
        self.bins = bins
        self.lo = lo
        self.hi = hi
        self.step = step
        self.k_max = k_max
        self.homology = homology
        self.triangle_rule = triangle_rule
        self.n_jobs = n_jobs

    def _grid(self) -> GridSpec:
        return GridSpec(tuple(self.lo), tuple(self.hi), self.step)

    def feature_length(self) -> int:
        nx, ny = self._grid().cells
        return len(_resolve_dims(self.homology)) * self.k_max * nx * ny

    def fit(self, X, y=None):
        self._grid()
        _resolve_dims(self.homology)
        _resolve_bank(self.bank)
        return self

    def transform(self, X) -> np.ndarray:
        images = as_gray_images(X)
        bank = _resolve_bank(self.bank)
        grid = self._grid()
        dims = _resolve_dims(self.homology)
        rows = Parallel(n_jobs=self.n_jobs)(
            delayed(_landscape_row)(
                img, bank, self.bins, grid, self.k_max, dims, self.triangle_rule
            )
            for img in images
        )
        return np.vstack(rows) if rows else np.empty((0, self.feature_length()))


def _diagram_row(image, direction, dims, resolution, sigma, value_range, maxval) -> np.ndarray:
    if direction == "lower":
        diagram = compute_persistence(lower_star_filtration(image))
    else:
        diagram = swap_for_upper_star(
            compute_persistence(upper_star_filtration(image)), maxval
        )
    return np.concatenate(
        [persistence_image(diagram, d, resolution, sigma, value_range).values for d in dims]
    )


class PersistenceImageFeaturizer(BaseEstimator, TransformerMixin):
    """Images -> persistence-image vectors of a 1-parameter star filtration.

    direction="lower" uses the sublevel (lower-star) filtration;
    direction="upper" the superlevel one, with births/deaths swapped back to
    the intensity scale before rasterizing.
    """

    def __init__(
        self,
        direction="lower",
        resolution=5,
        sigma=1.0,
        value_range=(0.0, 256.0),
        homology="both",
        maxval=255.0,
        n_jobs=None,
    ):
        self.direction = direction
        self.resolution = resolution
        self.sigma = sigma
        self.value_range = value_range
        self.homology = homology
        self.maxval = maxval
        self.n_jobs = n_jobs

    def feature_length(self) -> int:
        return len(_resolve_dims(self.homology)) * self.resolution**2

    def fit(self, X, y=None):
        if self.direction not in ("lower", "upper"):
            raise ValueError(f"direction must be 'lower' or 'upper', got {self.direction!r}")
        _resolve_dims(self.homology)
        return self

    def transform(self, X) -> np.ndarray:
        if self.direction not in ("lower", "upper"):
            raise ValueError(f"direction must be 'lower' or 'upper', got {self.direction!r}")
        images = as_gray_images(X)
        dims = _resolve_dims(self.homology)
        rows = Parallel(n_jobs=self.n_jobs)(
            delayed(_diagram_row)(
                img,
                self.direction,
                dims,
                self.resolution,
                self.sigma,
                tuple(self.value_range),
                self.maxval,
            )
            for img in images
        )
        return np.vstack(rows) if rows else np.empty((0, self.feature_length()))


STABILITY_GRID = GridSpec(lo=(-260.0, -260.0), hi=(260.0, 260.0), step=10.0)


def bank_bound_factor(bank: OperatorBank) -> int:
    """Sup-norm expansion bound of the bank: 2 with any DGENEO present,
    else 1 (identity and GENEO operators are non-expansive)."""
    return 2 if any(isinstance(op, DGeneo) for op in bank.operators) else 1


def _stability_pair(pair_seed, bank, size, grid, k_max, dims, intensity_range):
    rng = np.random.default_rng(np.random.SeedSequence(pair_seed))
    lo, hi = intensity_range
    img1 = GrayImage(rng.uniform(lo, hi, size=(size, size)))
    img2 = GrayImage(rng.uniform(lo, hi, size=(size, size)))
    d_phi = sup_distance(img1, img2)
    ls1 = landscapes(build_bifiltration(img1, bank), dims, k_max, grid)
    ls2 = landscapes(build_bifiltration(img2, bank), dims, k_max, grid)
    d_lambda = max(landscape_distance(ls1[d], ls2[d], math.inf) for d in dims)
    return d_phi, d_lambda


def run_stability(
    bank_kind: str = "multi-geneo",
    n_pairs: int = 100,
    size: int = 12,
    seed: int = 0,
    grid: GridSpec = STABILITY_GRID,
    k_max: int = 2,
    dims: tuple[int, ...] = (0, 1),
    intensity_range: tuple[float, float] = (0.0, 255.0),
    n_jobs=None,
) -> dict:
    """Check the landscape stability inequality on random image pairs.

    For each pair the landscape sup-distance must stay within
    factor * sup_distance(images) + grid step, where factor is 1 for pure
    GENEO banks and 2 when a DGENEO is involved.  Rescaling must be off:
    per-image min-max normalization is data-dependent and breaks the bound.
    """
    bank = default_bank(bank_kind, rescale=False) if isinstance(bank_kind, str) else bank_kind
    if bank.rescale:
        raise ValueError("stability harness requires a bank with rescale disabled")
    factor = bank_bound_factor(bank)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_stability_pair)((seed, i), bank, size, grid, k_max, dims, intensity_range)
        for i in range(n_pairs)
    )
    pairs = []
    violations = 0
    for d_phi, d_lambda in results:
        bound = factor * d_phi
        slack = bound + grid.step - d_lambda
        if slack < 0:
            violations += 1
        pairs.append(
            {"d_phi": d_phi, "d_lambda": d_lambda, "bound": bound, "slack": slack}
        )
    return {
        "bank": bank_kind if isinstance(bank_kind, str) else "custom",
        "factor": factor,
        "n_pairs": n_pairs,
        "size": size,
        "seed": seed,
        "step": grid.step,
        "violations": violations,
        "passed": violations == 0,
        "max_d_lambda": max((p["d_lambda"] for p in pairs), default=0.0),
        "min_slack": min((p["slack"] for p in pairs), default=0.0),
        "pairs": pairs,
    }
