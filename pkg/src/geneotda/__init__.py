"""Multiparameter persistent homology of grayscale images via GENEO banks.

Pipeline: an image is filtered by a two-operator bank (identity, Gaussian
GENEO, or difference-of-Gaussians DGENEO), the pixel-grid triangulation is
graded into a one-critical bifiltration, and its persistence landscapes (or
persistence images of the 1-parameter star filtrations) become fixed-length
feature vectors for classical classifiers.
"""

__version__ = "0.1.0"

from .complexes import (
    Bifiltration,
    Filtration1D,
    GridComplex,
    SimplicialComplex,
    bifiltration_from_images,
    build_bifiltration,
    build_grid_complex,
    coarsen_bifiltration,
    lower_star_filtration,
    read_bifiltration,
    upper_star_filtration,
    write_bifiltration,
    write_rivet_bifiltration,
)
from .features import FeatureVector, concat, landscape_vector, persistence_image
from .image import (
    FormatError,
    GrayImage,
    TruncationError,
    load_idx_images,
    load_idx_labels,
    read_pgm,
    sup_distance,
    write_pgm,
)
from .landscapes import (
    DEFAULT_GRID,
    GridSpec,
    Landscape,
    average_landscape,
    hilbert_function,
    landscape,
    landscape_distance,
    landscapes,
    rank_invariant,
    slice_filtration,
)
from .learn import LDA, PCA, LinearSVM, TrialProtocol, TrialReport, make_model, run_trials
from .operators import (
    DegenerateKernelError,
    DGeneo,
    Geneo,
    Identity,
    KernelSpec,
    OperatorBank,
    apply_operator,
    default_bank,
    rescale_image,
    sample_kernel,
)
from .persistence import (
    PersistenceDiagram,
    PersistencePoint,
    betti_numbers,
    compute_persistence,
    swap_for_upper_star,
)
from .pipeline import LandscapeFeaturizer, PersistenceImageFeaturizer, run_stability

__all__ = [name for name in dir() if not name.startswith("_")]
