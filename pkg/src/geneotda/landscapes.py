"""Rank invariants, Hilbert functions, and multiparameter persistence landscapes.

The landscape lambda(k, x) is the largest epsilon such that at least k
homology classes survive from x - (eps, eps) to x + (eps, eps).  For a
one-critical bifiltration this is read off the barcode of the filtration
restricted to the diagonal line through x: a bar [b, d) measured relative
to x contributes max(0, min(-b, d)), and lambda(k, x) is the k-th largest
contribution.

All basepoints on one diagonal line share that restriction up to a shift,
so the grid is evaluated with one matrix reduction per diagonal instead of
one per grid point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .complexes import Bifiltration, Filtration1D
from .image import GrayImage, write_pgm
from .persistence import compute_persistence, persistence_pairing

GRID_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Uniform evaluation grid: cells of size ``step`` covering [lo, hi]^2,
    evaluated at cell centers lo + (i + 1/2) * step."""

    lo: tuple[float, float]
    hi: tuple[float, float]
    step: float

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        for axis in range(2):
            if not self.lo[axis] < self.hi[axis]:
                raise ValueError(f"need lo < hi on axis {axis}: {self.lo} vs {self.hi}")
            n = (self.hi[axis] - self.lo[axis]) / self.step
            if abs(n - round(n)) > GRID_TOL * max(1.0, abs(n)):
                raise ValueError(
                    f"(hi - lo) / step = {n} on axis {axis} is not an integral cell count"
                )

    @property
    def cells(self) -> tuple[int, int]:
        return (
            int(round((self.hi[0] - self.lo[0]) / self.step)),
            int(round((self.hi[1] - self.lo[1]) / self.step)),
        )

    def centers(self, axis: int) -> np.ndarray:
        n = self.cells[axis]
        return self.lo[axis] + (np.arange(n) + 0.5) * self.step


DEFAULT_GRID = GridSpec(lo=(0.0, 0.0), hi=(260.0, 260.0), step=10.0)


@dataclass
class Landscape:
    """lambda(k, x) sampled on a grid; values indexed [k-1, ix, iy]."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        nx, ny = self.grid.cells
        if self.values.ndim != 3 or self.values.shape[1:] != (nx, ny):
            raise ValueError(f"values must have shape (k_max, {nx}, {ny})")

    @property
    def k_max(self) -> int:
        return self.values.shape[0]


def slice_filtration(b: Bifiltration, basepoint: tuple[float, float]) -> Filtration1D:
    """Restrict the bifiltration to the diagonal line through ``basepoint``.

    A simplex with grade g enters the slice at t = max(g1 - x1, g2 - x2),
    the first t with g <= basepoint + t * (1, 1).
    """
    x1, x2 = basepoint
    values = np.maximum(b.grades[:, 0] - x1, b.grades[:, 1] - x2)
    return Filtration1D(b.complex, values)


def _diagonal_bars(b: Bifiltration, delta: float, dims: tuple[int, ...]):
    """Bars of the slice along the line x1 - x2 = delta, parametrized by x1.

    Returns {dim: (births, deaths)} with inf deaths for essential classes.
    Zero-length bars are dropped (they never contribute to the landscape).
    """
    values = np.maximum(b.grades[:, 0], b.grades[:, 1] + delta)
    pairing = persistence_pairing(values, b.complex, validate=False)
    sdims = b.complex.dims
    out = {}
    for dim in dims:
        births = [values[i] for i, j in pairing.pairs if sdims[i] == dim and values[i] < values[j]]
        deaths = [values[j] for i, j in pairing.pairs if sdims[i] == dim and values[i] < values[j]]
        for sid in pairing.essential:
            if sdims[sid] == dim:
                births.append(values[sid])
                deaths.append(math.inf)
        out[dim] = (np.array(births), np.array(deaths))
    return out


def landscapes(
    b: Bifiltration,
    dims: tuple[int, ...] = (0, 1),
    k_max: int = 1,
    grid: GridSpec = DEFAULT_GRID,
) -> dict[int, Landscape]:
    """Landscapes for several homology dimensions, sharing one reduction per
    grid diagonal."""
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    nx, ny = grid.cells
    cx = grid.centers(0)
    out = {dim: np.zeros((k_max, nx, ny)) for dim in dims}
    for d in range(-(ny - 1), nx):
        i_lo = max(0, d)
        i_hi = min(nx - 1, ny - 1 + d)
        if i_lo > i_hi:
            continue
        delta = (grid.lo[0] - grid.lo[1]) + d * grid.step
        bars = _diagonal_bars(b, delta, tuple(dims))
        ii = np.arange(i_lo, i_hi + 1)
        x1s = cx[ii]
        for dim in dims:
            births, deaths = bars[dim]
            if len(births) == 0:
                continue
            eps = np.minimum(x1s[:, None] - births[None, :], deaths[None, :] - x1s[:, None])
            eps = np.maximum(eps, 0.0)
            eps.sort(axis=1)
            top = eps[:, ::-1][:, :k_max]
            vals = np.zeros((len(ii), k_max))
            vals[:, : top.shape[1]] = top
            out[dim][:, ii, ii - d] = vals.T
    return {dim: Landscape(grid, out[dim]) for dim in dims}


def landscape(
    b: Bifiltration, dim: int, k_max: int = 1, grid: GridSpec = DEFAULT_GRID
) -> Landscape:
    """Landscape of the dim-th homology of a bifiltration on a grid."""
    return landscapes(b, (dim,), k_max, grid)[dim]


def rank_invariant(b: Bifiltration, dim: int, a, bgrade) -> int:
    """Rank of H_dim(sublevel(a)) -> H_dim(sublevel(b)) for grades a <= b.

    Computed as a two-step filtration: sublevel(a) enters at 0, the rest of
    sublevel(b) at 1, everything else at 2; the rank is the number of dim-d
    classes born at or before 0 that survive past 1.
    """
    a = tuple(float(v) for v in a)
    bg = tuple(float(v) for v in bgrade)
    if not (a[0] <= bg[0] and a[1] <= bg[1]):
        raise ValueError(f"need a <= b componentwise, got {a} and {bg}")
    mask_a = b.sublevel_mask(a)
    mask_b = b.sublevel_mask(bg)
    values = np.full(len(b.complex), 2.0)
    values[mask_b] = 1.0
    values[mask_a] = 0.0
    diagram = compute_persistence(Filtration1D(b.complex, values))
    return diagram.alive_count(0.0, 1.0, dim)


def hilbert_function(b: Bifiltration, dim: int, grid: GridSpec = DEFAULT_GRID) -> np.ndarray:
    """dim H_dim at every grid point: the diagonal of the rank invariant."""
    nx, ny = grid.cells
    cx, cy = grid.centers(0), grid.centers(1)
    out = np.zeros((nx, ny), dtype=np.int64)
    for i in range(nx):
        for j in range(ny):
            point = (cx[i], cy[j])
            out[i, j] = rank_invariant(b, dim, point, point)
    return out


def landscape_distance(l1: Landscape, l2: Landscape, p: float = math.inf) -> float:
    """L^p distance between landscapes on the same grid; cells weigh step^2
    for finite p, and p = inf gives the sup of |difference|."""
    if l1.grid != l2.grid or l1.k_max != l2.k_max:
        raise ValueError("landscapes must share grid and k_max")
    diff = np.abs(l1.values - l2.values)
    if math.isinf(p):
        return float(diff.max())
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    weight = l1.grid.step ** 2
    return float((np.sum(diff**p) * weight) ** (1.0 / p))


def average_landscape(items: list[Landscape]) -> Landscape:
    """Pointwise arithmetic mean of landscapes on a common grid."""
    if not items:
        raise ValueError("cannot average an empty list of landscapes")
    first = items[0]
    for other in items[1:]:
        if other.grid != first.grid or other.k_max != first.k_max:
            raise ValueError("landscapes must share grid and k_max")
    stacked = np.stack([l.values for l in items])
    return Landscape(first.grid, stacked.mean(axis=0))


def landscape_to_json(l: Landscape) -> dict:
    """JSON form: grid parameters plus one row-major value list per k
    (index ix * ny + iy)."""
    return {
        "k_max": l.k_max,
        "lo": list(l.grid.lo),
        "hi": list(l.grid.hi),
        "step": l.grid.step,
        "values": [l.values[k].reshape(-1).tolist() for k in range(l.k_max)],
    }


def landscape_from_json(data: dict) -> Landscape:
    grid = GridSpec(tuple(data["lo"]), tuple(data["hi"]), data["step"])
    nx, ny = grid.cells
    values = np.array(data["values"]).reshape(data["k_max"], nx, ny)
    return Landscape(grid, values)


def save_landscape(l: Landscape, path) -> None:
    with open(path, "w") as fh:
        json.dump(landscape_to_json(l), fh, sort_keys=True)
        fh.write("\n")


def load_landscape(path) -> Landscape:
    with open(path) as fh:
        return landscape_from_json(json.load(fh))


def landscape_heatmap_pgm(l: Landscape, k: int = 1) -> bytes:
    """Render lambda(k, .) as a min-max scaled PGM heatmap.

    The first grid axis runs left to right, the second bottom to top.
    """
    if not 1 <= k <= l.k_max:
        raise ValueError(f"k must be in 1..{l.k_max}, got {k}")
    plane = l.values[k - 1].T[::-1]
    vmin, vmax = float(plane.min()), float(plane.max())
    if vmax == vmin:
        vmax = vmin + 1.0
    return write_pgm(GrayImage(plane), vmin, vmax)
