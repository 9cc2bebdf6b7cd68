"""Persistent homology of 1-parameter filtrations over the two-element field.

Simplices are ordered by (value, dimension, simplex id) and the boundary
matrix is reduced left to right with sparse columns; the clearing shortcut
skips columns already known to reduce to zero.  Everything is exact integer
/ set arithmetic, so identical input always yields an identical diagram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complexes import Filtration1D, SimplicialComplex


@dataclass(frozen=True)
class PersistencePoint:
    birth: float
    death: float  # math.inf for essential classes
    dim: int

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass
class PersistenceDiagram:
    """Multiset of (birth, death, dim) points, zero-persistence pairs dropped."""

    points: list[PersistencePoint]

    def in_dim(self, dim: int) -> list[PersistencePoint]:
        return [p for p in self.points if p.dim == dim]

    def essential(self, dim: int | None = None) -> list[PersistencePoint]:
        return [
            p for p in self.points if math.isinf(p.death) and (dim is None or p.dim == dim)
        ]

    def alive_count(self, s: float, t: float, dim: int) -> int:
        """Classes born at or before s that are still alive strictly after t."""
        return sum(1 for p in self.points if p.dim == dim and p.birth <= s and p.death > t)

    def __len__(self):
        return len(self.points)


@dataclass
class Pairing:
    """Raw reduction output in simplex-id space (zero-length pairs included)."""

    pairs: list[tuple[int, int]]  # (birth simplex id, death simplex id)
    essential: list[int]          # positive simplices never killed


def persistence_pairing(
    values: np.ndarray, complex: SimplicialComplex, validate: bool = True
) -> Pairing:
    """Reduce the filtered boundary matrix and return the simplex pairing.

    Columns are processed by decreasing simplex dimension so that every
    birth simplex found in dimension d+1 clears its own column in dimension
    d (it is known to reduce to zero).  The resulting pairing is the same as
    for the plain left-to-right reduction.
    """
    values = np.asarray(values, dtype=np.float64)
    dims = complex.dims
    facets = complex.facets
    n = len(values)
    if validate:
        for i, fs in enumerate(facets):
            for f in fs:
                if values[f] > values[i]:
                    raise ValueError(
                        f"filtration not monotone: face {f} enters at {values[f]} "
                        f"after simplex {i} at {values[i]}"
                    )

    order = np.lexsort((dims, values))  # stable, so ties fall back to simplex id
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    # plain python ints keep the set arithmetic below cheap
    order_list = order.tolist()
    pos_list = pos.tolist()
    dims_list = dims.tolist()

    owner: dict[int, set[int]] = {}  # low position -> its reduced column
    cleared = [False] * n
    negative = [False] * n
    pairs: list[tuple[int, int]] = []

    for d in (2, 1):
        for j in range(n):
            sid = order_list[j]
            if dims_list[sid] != d or cleared[sid]:
                continue
            col = {pos_list[f] for f in facets[sid]}
            while col:
                low = max(col)
                other = owner.get(low)
                if other is None:
                    break
                col ^= other
            if col:
                owner[low] = col
                birth_id = order_list[low]
                pairs.append((birth_id, sid))
                negative[sid] = True
                cleared[birth_id] = True

    killed = [False] * n
    for birth_id, _ in pairs:
        killed[birth_id] = True
    essential = [i for i in range(n) if not negative[i] and not killed[i]]
    pairs.sort(key=lambda p: (dims_list[p[0]], pos_list[p[0]]))
    return Pairing(pairs, essential)


def compute_persistence(
    filtration: Filtration1D, return_pairing: bool = False
) -> PersistenceDiagram | tuple[PersistenceDiagram, Pairing]:
    """Persistence diagram of a monotone 1-parameter filtration.

    Zero-persistence pairs are dropped from the diagram; pass
    ``return_pairing=True`` to also get the raw simplex pairing.
    """
    if not filtration.is_monotone():
        raise ValueError("filtration is not monotone (face after coface)")
    values = filtration.values
    dims = filtration.complex.dims
    pairing = persistence_pairing(values, filtration.complex, validate=False)
    points = []
    for birth_id, death_id in pairing.pairs:
        if values[birth_id] < values[death_id]:
            points.append(
                PersistencePoint(float(values[birth_id]), float(values[death_id]), int(dims[birth_id]))
            )
    for sid in pairing.essential:
        if dims[sid] <= 1:  # the complexes here carry no 3-cells
            points.append(PersistencePoint(float(values[sid]), math.inf, int(dims[sid])))
    points.sort(key=lambda p: (p.dim, p.birth, p.death))
    diagram = PersistenceDiagram(points)
    return (diagram, pairing) if return_pairing else diagram


def _rank_f2(mat: np.ndarray) -> int:
    """Rank over F2 by Gaussian elimination on a dense 0/1 matrix."""
    if mat.size == 0:
        return 0
    m = mat.astype(np.uint8).copy()
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        pivot = -1
        for r in range(rank, rows):
            if m[r, c]:
                pivot = r
                break
        if pivot < 0:
            continue
        if pivot != rank:
            m[[rank, pivot]] = m[[pivot, rank]]
        hits = np.flatnonzero(m[:, c])
        hits = hits[hits != rank]
        m[hits] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def _boundary_matrix(complex: SimplicialComplex, ids: np.ndarray, d: int) -> np.ndarray:
    """Dense F2 boundary matrix rows=(d-1)-simplices, cols=d-simplices of a
    subcomplex given by simplex ids."""
    dims = complex.dims
    rows = [i for i in ids if dims[i] == d - 1]
    cols = [i for i in ids if dims[i] == d]
    row_of = {sid: k for k, sid in enumerate(rows)}
    mat = np.zeros((len(rows), len(cols)), dtype=np.uint8)
    for k, sid in enumerate(cols):
        for f in complex.facets[sid]:
            mat[row_of[f], k] = 1
    return mat


def betti_numbers(filtration: Filtration1D, t: float) -> tuple[int, int]:
    """(b0, b1) of the sublevel complex at t, by dense Gaussian elimination.

    Independent of the reduction above; intended as an oracle and for spot
    checks, so it favors clarity over speed.
    """
    ids = filtration.sublevel_ids(t)
    dims = filtration.complex.dims
    n_v = int(np.sum(dims[ids] == 0))
    n_e = int(np.sum(dims[ids] == 1))
    r1 = _rank_f2(_boundary_matrix(filtration.complex, ids, 1))
    r2 = _rank_f2(_boundary_matrix(filtration.complex, ids, 2))
    return n_v - r1, (n_e - r1) - r2


def swap_for_upper_star(diagram: PersistenceDiagram, maxval: float = 255.0) -> PersistenceDiagram:
    """Map a diagram computed from a negated image back to intensity scale.

    Finite coordinates map v -> -v and each point is swapped so that birth <
    death.  An infinite death marks a class that survives the whole sweep of
    the [0, maxval] scale; after the swap its birth is pinned to the scale's
    low endpoint 0.  Points that end up with zero persistence are dropped.
    """
    points = []
    for p in diagram.points:
        if math.isinf(p.death):
            birth, death = 0.0, -p.birth
        else:
            birth, death = -p.death, -p.birth
        if death > birth:
            points.append(PersistencePoint(birth, death, p.dim))
    points.sort(key=lambda q: (q.dim, q.birth, q.death))
    return PersistenceDiagram(points)


def write_diagram_csv(diagram: PersistenceDiagram, fh) -> None:
    """CSV rows 'dim,birth,death' with the literal 'inf' for infinite deaths."""
    fh.write("dim,birth,death\n")
    for p in diagram.points:
        death = "inf" if math.isinf(p.death) else repr(p.death)
        fh.write(f"{p.dim},{repr(p.birth)},{death}\n")


def read_diagram_csv(fh) -> PersistenceDiagram:
    header = fh.readline().strip()
    if header != "dim,birth,death":
        raise ValueError(f"unexpected diagram CSV header: {header!r}")
    points = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        dim, birth, death = line.split(",")
        points.append(
            PersistencePoint(float(birth), math.inf if death == "inf" else float(death), int(dim))
        )
    return PersistenceDiagram(points)
