import math

import numpy as np
import pytest

from geneotda.complexes import (
    Bifiltration,
    bifiltration_from_images,
    build_bifiltration,
    build_grid_complex,
)
from geneotda.demo import demo_bifiltration
from geneotda.image import GrayImage
from geneotda.landscapes import (
    DEFAULT_GRID,
    GridSpec,
    Landscape,
    average_landscape,
    hilbert_function,
    landscape,
    landscape_distance,
    landscape_from_json,
    landscape_heatmap_pgm,
    landscape_to_json,
    landscapes,
    rank_invariant,
    slice_filtration,
)
from geneotda.operators import default_bank
from geneotda.persistence import compute_persistence

from conftest import random_int_image
from oracles import homology_map_rank


def random_bifiltration(rng, width=3, height=2, rule="simplex-max", hi=8) -> Bifiltration:
    """Small random one-critical bifiltration with integer grades."""
    psi1 = random_int_image(rng, width, height, 0, hi)
    psi2 = random_int_image(rng, width, height, 0, hi)
    return bifiltration_from_images(psi1, psi2, rule)


def single_vertex_bifiltration(gx=0.0, gy=0.0) -> Bifiltration:
    c = build_grid_complex(1, 1)
    return Bifiltration(c, np.array([[gx, gy]]))


class TestGridSpec:
    def test_non_integral_cells_rejected(self):
        with pytest.raises(ValueError):
            GridSpec((0.0, 0.0), (255.0, 255.0), 10.0)

    def test_default_grid(self):
        assert DEFAULT_GRID.cells == (26, 26)
        centers = DEFAULT_GRID.centers(0)
        assert centers[0] == 5.0 and centers[-1] == 255.0

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            GridSpec((0.0, 0.0), (0.0, 10.0), 1.0)
        with pytest.raises(ValueError):
            GridSpec((0.0, 0.0), (10.0, 10.0), -1.0)


class TestSliceFiltration:
    def test_grade_at_basepoint(self):
        b = single_vertex_bifiltration(4.0, 6.0)
        f = slice_filtration(b, (4.0, 6.0))
        assert f.values.tolist() == [0.0]

    def test_max_rule(self):
        b = single_vertex_bifiltration(9.0, 8.0)
        assert slice_filtration(b, (0.0, 0.0)).values.tolist() == [9.0]

    def test_sublevel_matches_shifted_bifiltration(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            b = random_bifiltration(rng)
            x = (float(rng.integers(0, 8)), float(rng.integers(0, 8)))
            f = slice_filtration(b, x)
            for t in range(-8, 10):
                expected = b.sublevel_mask((x[0] + t, x[1] + t))
                assert np.array_equal(f.values <= t, expected)

    def test_slice_is_monotone(self):
        rng = np.random.default_rng(32)
        b = random_bifiltration(rng, 4, 4)
        assert slice_filtration(b, (3.0, 1.0)).is_monotone()


class TestLandscapeValues:
    def test_empty_module_above_grid(self):
        grid = GridSpec((0.0, 0.0), (8.0, 8.0), 2.0)
        b = single_vertex_bifiltration(300.0, 300.0)
        l = landscape(b, 0, k_max=2, grid=grid)
        assert np.all(l.values == 0.0)

    def test_single_vertex_analytic(self):
        # essential bar [max(-x1, -x2), inf) => lambda(1, x) = max(0, min(x1, x2))
        grid = GridSpec((0.0, 0.0), (8.0, 8.0), 1.0)
        b = single_vertex_bifiltration(0.0, 0.0)
        l = landscape(b, 0, k_max=1, grid=grid)
        cx, cy = grid.centers(0), grid.centers(1)
        for i, x1 in enumerate(cx):
            for j, x2 in enumerate(cy):
                assert l.values[0, i, j] == max(0.0, min(x1, x2))
        # spot value from the formula: basepoint (3.5, 5.5) -> 3.5
        assert l.values[0, 3, 5] == 3.5

    def test_matches_per_basepoint_slicing(self):
        # the shared per-diagonal reduction must equal naive slicing exactly
        rng = np.random.default_rng(33)
        b = random_bifiltration(rng, 4, 3, hi=6)
        grid = GridSpec((0.0, 0.0), (8.0, 8.0), 1.0)
        computed = landscapes(b, (0, 1), k_max=3, grid=grid)
        cx, cy = grid.centers(0), grid.centers(1)
        for i, x1 in enumerate(cx):
            for j, x2 in enumerate(cy):
                d = compute_persistence(slice_filtration(b, (x1, x2)))
                for dim in (0, 1):
                    vals = sorted(
                        (max(0.0, min(-p.birth, p.death)) for p in d.in_dim(dim)),
                        reverse=True,
                    )
                    vals = (vals + [0.0] * 3)[:3]
                    got = computed[dim].values[:, i, j].tolist()
                    assert got == pytest.approx(vals, abs=1e-12)

    def test_matches_rank_invariant_definition(self):
        # lambda(k, x) == sup{eps : rank(x - eps*1 -> x + eps*1) >= k},
        # the direct definition, up to the eps discretization step/4
        rng = np.random.default_rng(34)
        grid = GridSpec((0.0, 0.0), (8.0, 8.0), 4.0)
        fine = grid.step / 4.0
        for _ in range(8):
            b = random_bifiltration(rng)
            computed = landscapes(b, (0, 1), k_max=3, grid=grid)
            for dim in (0, 1):
                for i, x1 in enumerate(grid.centers(0)):
                    for j, x2 in enumerate(grid.centers(1)):
                        ranks = []
                        eps = 0.0
                        cap = 40.0
                        while eps <= cap:
                            r = rank_invariant(b, dim, (x1 - eps, x2 - eps), (x1 + eps, x2 + eps))
                            ranks.append((eps, r))
                            if r == 0:
                                break
                            eps += fine
                        for k in range(1, 4):
                            oracle = 0.0
                            for e, r in ranks:
                                if r >= k:
                                    oracle = e
                            got = computed[dim].values[k - 1, i, j]
                            assert abs(got - oracle) <= fine + 1e-9

    def test_monotone_in_k_and_nonnegative(self):
        rng = np.random.default_rng(35)
        b = random_bifiltration(rng, 4, 4)
        grid = GridSpec((0.0, 0.0), (10.0, 10.0), 1.0)
        l = landscapes(b, (0, 1), k_max=3, grid=grid)
        for dim in (0, 1):
            v = l[dim].values
            assert np.all(v >= 0.0)
            assert np.all(np.diff(v, axis=0) <= 1e-12)

    def test_one_lipschitz_along_axes(self):
        rng = np.random.default_rng(36)
        b = random_bifiltration(rng, 4, 4)
        grid = GridSpec((0.0, 0.0), (10.0, 10.0), 1.0)
        l = landscapes(b, (0, 1), k_max=2, grid=grid)
        for dim in (0, 1):
            v = l[dim].values
            assert np.max(np.abs(np.diff(v, axis=1))) <= grid.step + 1e-9
            assert np.max(np.abs(np.diff(v, axis=2))) <= grid.step + 1e-9

    def test_bad_k_max(self):
        with pytest.raises(ValueError):
            landscape(single_vertex_bifiltration(), 0, k_max=0)


class TestRankInvariant:
    def test_connected_beyond_all_grades(self):
        b = demo_bifiltration()
        assert rank_invariant(b, 0, (99.0, 99.0), (99.0, 99.0)) == 1

    def test_worked_example_h1(self):
        b = demo_bifiltration("simplex-max")
        assert rank_invariant(b, 1, (9.0, 8.0), (9.0, 8.0)) == 1
        assert rank_invariant(b, 1, (8.0, 8.0), (8.0, 8.0)) == 0

    def test_order_enforced(self):
        b = demo_bifiltration()
        with pytest.raises(ValueError):
            rank_invariant(b, 0, (5.0, 5.0), (4.0, 6.0))

    def test_matches_elimination_oracle(self):
        rng = np.random.default_rng(37)
        for _ in range(10):
            b = random_bifiltration(rng)
            for _ in range(8):
                a = (float(rng.integers(0, 9)), float(rng.integers(0, 9)))
                shift = (float(rng.integers(0, 4)), float(rng.integers(0, 4)))
                bg = (a[0] + shift[0], a[1] + shift[1])
                # oracle: two-step values fed to the dense elimination ranks
                values = np.where(b.sublevel_mask(a), 0.0, np.where(b.sublevel_mask(bg), 1.0, 2.0))
                for dim in (0, 1):
                    expected = homology_map_rank(b.complex.simplices, values, 0.0, 1.0, dim)
                    assert rank_invariant(b, dim, a, bg) == expected


class TestHilbertFunction:
    def test_below_all_grades(self):
        grid = GridSpec((-10.5, -10.5), (-5.5, -5.5), 1.0)
        assert np.all(hilbert_function(demo_bifiltration(), 0, grid) == 0)

    def test_worked_example_h1_support(self):
        grid = GridSpec((-0.5, -0.5), (10.5, 10.5), 1.0)  # centers at integers 0..10
        h1 = hilbert_function(demo_bifiltration("simplex-max"), 1, grid)
        nonzero = {(i, j) for i, j in zip(*np.nonzero(h1))}
        assert nonzero == {(9, 8), (10, 8)}
        assert h1[9, 8] == 1

    def test_is_diagonal_of_rank_invariant(self):
        rng = np.random.default_rng(38)
        b = random_bifiltration(rng)
        grid = GridSpec((-0.5, -0.5), (8.5, 8.5), 1.0)
        h = hilbert_function(b, 0, grid)
        for i, x1 in enumerate(grid.centers(0)):
            for j, x2 in enumerate(grid.centers(1)):
                assert h[i, j] == rank_invariant(b, 0, (x1, x2), (x1, x2))


class TestDistancesAndAverages:
    def make_pair(self):
        rng = np.random.default_rng(39)
        grid = GridSpec((0.0, 0.0), (8.0, 8.0), 2.0)
        l1 = landscape(random_bifiltration(rng), 0, k_max=2, grid=grid)
        l2 = landscape(random_bifiltration(rng), 0, k_max=2, grid=grid)
        return l1, l2

    def test_self_distance_zero(self):
        l1, _ = self.make_pair()
        assert landscape_distance(l1, l1, math.inf) == 0.0
        assert landscape_distance(l1, l1, 2.0) == 0.0

    def test_distance_to_zero_is_max(self):
        l1, _ = self.make_pair()
        zero = Landscape(l1.grid, np.zeros_like(l1.values))
        assert landscape_distance(l1, zero, math.inf) == l1.values.max()

    def test_inf_matches_loop_oracle(self):
        l1, l2 = self.make_pair()
        expected = max(
            abs(float(a) - float(b))
            for a, b in zip(l1.values.reshape(-1), l2.values.reshape(-1))
        )
        assert landscape_distance(l1, l2, math.inf) == expected

    def test_finite_p_weighting(self):
        grid = GridSpec((0.0, 0.0), (4.0, 4.0), 2.0)
        ones = Landscape(grid, np.ones((1, 2, 2)))
        zero = Landscape(grid, np.zeros((1, 2, 2)))
        # integral of 1 over four 2x2 cells = 16; L2 norm = 4
        assert landscape_distance(ones, zero, 2.0) == pytest.approx(4.0)

    def test_grid_mismatch(self):
        l1, _ = self.make_pair()
        other = Landscape(GridSpec((0.0, 0.0), (4.0, 4.0), 2.0), np.zeros((2, 2, 2)))
        with pytest.raises(ValueError):
            landscape_distance(l1, other, math.inf)

    def test_average_single(self):
        l1, _ = self.make_pair()
        assert np.array_equal(average_landscape([l1]).values, l1.values)

    def test_average_with_zero_halves(self):
        l1, _ = self.make_pair()
        zero = Landscape(l1.grid, np.zeros_like(l1.values))
        avg = average_landscape([l1, zero])
        assert np.array_equal(avg.values, l1.values / 2.0)

    def test_average_empty_rejected(self):
        with pytest.raises(ValueError):
            average_landscape([])


class TestStabilityBound:
    def test_multi_geneo_pairs_within_sup_distance(self):
        # small version of the acceptance harness: bound = D_phi + step
        from geneotda.image import sup_distance

        rng = np.random.default_rng(40)
        bank = default_bank("multi-geneo", rescale=False)
        grid = GridSpec((-60.0, -60.0), (320.0, 320.0), 10.0)
        for _ in range(5):
            img1 = GrayImage(rng.uniform(0, 255, (8, 8)))
            img2 = GrayImage(rng.uniform(0, 255, (8, 8)))
            l1 = landscapes(build_bifiltration(img1, bank), (0, 1), 2, grid)
            l2 = landscapes(build_bifiltration(img2, bank), (0, 1), 2, grid)
            bound = sup_distance(img1, img2) + grid.step
            for dim in (0, 1):
                assert landscape_distance(l1[dim], l2[dim], math.inf) <= bound


class TestSerialization:
    def test_json_round_trip(self):
        rng = np.random.default_rng(41)
        l = landscape(random_bifiltration(rng), 1, k_max=2, grid=GridSpec((0, 0), (8, 8), 2.0))
        again = landscape_from_json(landscape_to_json(l))
        assert again.grid == l.grid
        assert np.array_equal(again.values, l.values)

    def test_heatmap_pgm(self):
        rng = np.random.default_rng(42)
        l = landscape(random_bifiltration(rng), 0, k_max=1, grid=GridSpec((0, 0), (8, 8), 1.0))
        data = landscape_heatmap_pgm(l, 1)
        assert data.startswith(b"P5\n8 8\n255\n")
        with pytest.raises(ValueError):
            landscape_heatmap_pgm(l, 2)
