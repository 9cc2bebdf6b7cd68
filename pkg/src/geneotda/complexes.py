"""Triangulated pixel grids, 1-parameter star filtrations, and bifiltrations.

Each unit square of the pixel grid is split into two triangles by the
diagonal from its upper-left to its lower-right corner.  Filtration values
and grades are assigned per simplex (one-critical): a simplex enters the
filtration when the last of the relevant pixels does.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .image import GrayImage
from .operators import OperatorBank, apply_operator, rescale_image

TRIANGLE_RULES = ("square-max", "simplex-max")


class SimplicialComplex:
    """Simplices of dimension <= 2 in a fixed deterministic order.

    A simplex is a sorted tuple of vertex ids.  ``facets[i]`` holds the ids
    of the codimension-1 faces of simplex ``i`` (the two endpoints of an
    edge, the three edges of a triangle).
    """

    def __init__(self, simplices: list[tuple[int, ...]]):
        index: dict[tuple[int, ...], int] = {}
        for i, s in enumerate(simplices):
            s = tuple(s)
            if not 1 <= len(s) <= 3:
                raise ValueError(f"simplex {s} has unsupported dimension")
            if list(s) != sorted(set(s)):
                raise ValueError(f"simplex vertices must be strictly increasing, got {s}")
            index[s] = i
        facets: list[tuple[int, ...]] = []
        for s in simplices:
            s = tuple(s)
            if len(s) == 1:
                facets.append(())
            else:
                fs = []
                for drop in range(len(s)):
                    face = s[:drop] + s[drop + 1 :]
                    if face not in index:
                        raise ValueError(f"face {face} of {s} missing from complex")
                    fs.append(index[face])
                facets.append(tuple(fs))
        self.simplices = [tuple(s) for s in simplices]
        self.index = index
        self.facets = facets
        self.dims = np.array([len(s) - 1 for s in simplices], dtype=np.int8)

    def __len__(self):
        return len(self.simplices)

    def count(self, dim: int) -> int:
        return int(np.sum(self.dims == dim))

    def euler_characteristic(self) -> int:
        return self.count(0) - self.count(1) + self.count(2)


class GridComplex(SimplicialComplex):
    """Triangulation of a width x height pixel grid.

    Vertex id = row-major pixel index.  Simplex order: vertices, then edges
    (horizontal, vertical, diagonal, each row-major), then the two triangles
    of each square (upper {TL,TR,BR}, then lower {TL,BL,BR}).
    """

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise ValueError(f"grid needs positive dimensions, got {width}x{height}")
        w, h = width, height

        def vid(r, c):
            return r * w + c

        vertices = [(vid(r, c),) for r in range(h) for c in range(w)]
        edges = []
        for r in range(h):
            for c in range(w - 1):
                edges.append((vid(r, c), vid(r, c + 1)))
        for r in range(h - 1):
            for c in range(w):
                edges.append((vid(r, c), vid(r + 1, c)))
        for r in range(h - 1):
            for c in range(w - 1):
                edges.append((vid(r, c), vid(r + 1, c + 1)))

        triangles = []
        squares = []
        for r in range(h - 1):
            for c in range(w - 1):
                tl, tr = vid(r, c), vid(r, c + 1)
                bl, br = vid(r + 1, c), vid(r + 1, c + 1)
                triangles.append(tuple(sorted((tl, tr, br))))
                triangles.append(tuple(sorted((tl, bl, br))))
                squares.append((tl, tr, bl, br))
                squares.append((tl, tr, bl, br))

        super().__init__(vertices + edges + triangles)
        self.width = w
        self.height = h
        self.edge_endpoints = np.array(edges, dtype=np.int64).reshape(len(edges), 2)
        self.tri_vertices = np.array(triangles, dtype=np.int64).reshape(len(triangles), 3)
        self.tri_square = np.array(squares, dtype=np.int64).reshape(len(squares), 4)

    def vertex_id(self, row: int, col: int) -> int:
        return row * self.width + col


@lru_cache(maxsize=64)
def build_grid_complex(width: int, height: int) -> GridComplex:
    """Cached grid complex; treat the returned object as immutable."""
    return GridComplex(width, height)


@dataclass
class Filtration1D:
    """A 1-parameter filtration: one real value per simplex."""

    complex: SimplicialComplex
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.complex),):
            raise ValueError("one filtration value per simplex required")

    def is_monotone(self) -> bool:
        v = self.values
        return all(
            v[f] <= v[i] for i, fs in enumerate(self.complex.facets) for f in fs
        )

    def sublevel_ids(self, t: float) -> np.ndarray:
        return np.flatnonzero(self.values <= t)


@dataclass
class Bifiltration:
    """A one-critical bifiltration: one (gx, gy) birth grade per simplex."""

    complex: SimplicialComplex
    grades: np.ndarray
    triangle_rule: str = "square-max"

    def __post_init__(self):
        self.grades = np.asarray(self.grades, dtype=np.float64)
        if self.grades.shape != (len(self.complex), 2):
            raise ValueError("one (gx, gy) grade per simplex required")
        if self.triangle_rule not in TRIANGLE_RULES:
            raise ValueError(f"triangle_rule must be one of {TRIANGLE_RULES}")

    def is_monotone(self) -> bool:
        g = self.grades
        return all(
            g[f, 0] <= g[i, 0] and g[f, 1] <= g[i, 1]
            for i, fs in enumerate(self.complex.facets)
            for f in fs
        )

    def sublevel_mask(self, grade) -> np.ndarray:
        gx, gy = grade
        return (self.grades[:, 0] <= gx) & (self.grades[:, 1] <= gy)


def _star_values(complex: GridComplex, vertex_values: np.ndarray) -> np.ndarray:
    """Per-simplex max of its own vertex values (lower-star rule)."""
    v = vertex_values
    edge_vals = np.maximum(v[complex.edge_endpoints[:, 0]], v[complex.edge_endpoints[:, 1]])
    tri_vals = v[complex.tri_vertices].max(axis=1) if len(complex.tri_vertices) else np.empty(0)
    return np.concatenate([v, edge_vals, tri_vals])


def lower_star_filtration(image: GrayImage) -> Filtration1D:
    """Sublevel filtration where each simplex enters with its highest pixel."""
    complex = build_grid_complex(image.width, image.height)
    return Filtration1D(complex, _star_values(complex, image.values.copy()))


def upper_star_filtration(image: GrayImage) -> Filtration1D:
    """Superlevel filtration, realized as the lower-star filtration of -image.

    Filtration values are therefore negated intensities; report diagrams
    through persistence.swap_for_upper_star to return to the original scale.
    """
    return lower_star_filtration(GrayImage(-image.pixels))


def bifiltration_from_images(
    psi1: GrayImage, psi2: GrayImage, triangle_rule: str = "square-max"
) -> Bifiltration:
    """Grade the grid complex by two coordinate images of equal size.

    Vertex grade = (psi1(v), psi2(v)); edge grade = componentwise max of its
    endpoints.  Triangle grades take the componentwise max over all four
    vertices of the surrounding square ("square-max") or over the triangle's
    own three vertices ("simplex-max").
    """
    if psi1.pixels.shape != psi2.pixels.shape:
        raise ValueError("coordinate images must have equal dimensions")
    if triangle_rule not in TRIANGLE_RULES:
        raise ValueError(f"triangle_rule must be one of {TRIANGLE_RULES}")
    complex = build_grid_complex(psi1.width, psi1.height)
    grades = np.empty((len(complex), 2))
    for axis, psi in enumerate((psi1, psi2)):
        v = psi.values
        edge_vals = np.maximum(v[complex.edge_endpoints[:, 0]], v[complex.edge_endpoints[:, 1]])
        tri_ids = complex.tri_square if triangle_rule == "square-max" else complex.tri_vertices
        tri_vals = v[tri_ids].max(axis=1) if len(tri_ids) else np.empty(0)
        grades[:, axis] = np.concatenate([v, edge_vals, tri_vals])
    return Bifiltration(complex, grades, triangle_rule)


def build_bifiltration(
    image: GrayImage,
    bank: OperatorBank,
    triangle_rule: str = "square-max",
) -> Bifiltration:
    """Grade the grid complex by a two-operator bank applied to one image.

    With the bank's rescale flag set, each operator output is min-max mapped
    onto [0, 255] before grading.
    """
    if len(bank) != 2:
        raise ValueError(f"bifiltration needs a bank of exactly 2 operators, got {len(bank)}")
    psi1 = apply_operator(bank.operators[0], image)
    psi2 = apply_operator(bank.operators[1], image)
    if bank.rescale:
        psi1 = rescale_image(psi1, 0.0, 255.0)
        psi2 = rescale_image(psi2, 0.0, 255.0)
    return bifiltration_from_images(psi1, psi2, triangle_rule)


def coarsen_bifiltration(b: Bifiltration, bins: int) -> Bifiltration:
    """Snap each grade component up to the next of bins+1 uniform boundaries.

    The boundaries partition the observed range of that component; snapping
    up keeps every coarse sublevel set inside the corresponding fine one and
    preserves monotonicity.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    out = b.grades.copy()
    for axis in range(2):
        col = out[:, axis]
        lo, hi = float(col.min()), float(col.max())
        if hi == lo:
            continue
        cell = (hi - lo) / bins
        idx = np.ceil((col - lo) / cell)
        snapped = lo + np.clip(idx, 0, bins) * cell
        # guard against float round-down so snapped >= col always holds
        under = snapped < col
        if np.any(under):
            snapped[under] = lo + np.clip(idx[under] + 1, 0, bins) * cell
        out[:, axis] = snapped
    return Bifiltration(b.complex, out, b.triangle_rule)


def _format_grade(x) -> str:
    return repr(float(x))  # shortest round-tripping decimal


def write_bifiltration(b: Bifiltration, fh) -> None:
    """Text export: 'width height' and triangle_rule header lines, then one
    simplex per line as 'v0 [v1 [v2]] ; gx gy'."""
    width = getattr(b.complex, "width", 0)
    height = getattr(b.complex, "height", 0)
    fh.write(f"{width} {height}\n{b.triangle_rule}\n")
    for simplex, grade in zip(b.complex.simplices, b.grades):
        verts = " ".join(str(v) for v in simplex)
        fh.write(f"{verts} ; {_format_grade(grade[0])} {_format_grade(grade[1])}\n")


def read_bifiltration(fh) -> Bifiltration:
    header = fh.readline().split()
    if len(header) != 2:
        raise ValueError(f"expected 'width height' header, got {header}")
    width, height = int(header[0]), int(header[1])
    rule = fh.readline().strip()
    simplices = []
    grades = []
    for lineno, line in enumerate(fh, start=3):
        line = line.strip()
        if not line:
            continue
        try:
            left, right = line.split(";")
            simplices.append(tuple(int(v) for v in left.split()))
            gx, gy = right.split()
            grades.append((float(gx), float(gy)))
        except ValueError as exc:
            raise ValueError(f"bad bifiltration line {lineno}: {line!r}") from exc
    if width >= 1 and height >= 1:
        complex = build_grid_complex(width, height)
        if complex.simplices != simplices:
            raise ValueError("simplex list does not match the declared grid dimensions")
    else:
        complex = SimplicialComplex(simplices)
    return Bifiltration(complex, np.array(grades), rule)


def write_rivet_bifiltration(b: Bifiltration, fh, xlabel="parameter 1", ylabel="parameter 2") -> None:
    """Export in RIVET's plain-text bifiltration input format."""
    fh.write(f"bifiltration\n{xlabel}\n{ylabel}\n\n")
    for simplex, grade in zip(b.complex.simplices, b.grades):
        verts = " ".join(str(v) for v in simplex)
        fh.write(f"{verts} ; {_format_grade(grade[0])} {_format_grade(grade[1])}\n")
