import json
import math

import numpy as np
import pytest

from geneotda.image import GrayImage, sup_distance
from geneotda.operators import (
    BANK_KINDS,
    DegenerateKernelError,
    DGeneo,
    Geneo,
    Identity,
    KernelSpec,
    OperatorBank,
    apply_operator,
    bank_from_config,
    bank_to_config,
    default_bank,
    rescale_image,
    sample_kernel,
)

from conftest import random_image


def random_geneo(rng, exponent="squared") -> Geneo:
    """Random kernel satisfying the amplitude/center constraint."""
    k = int(rng.integers(1, 4))
    amps = rng.uniform(-1.5, 1.5, k)
    while np.allclose(amps, 0):
        amps = rng.uniform(-1.5, 1.5, k)
    centers = rng.uniform(0.1, 2.0, k)
    centers *= math.sqrt(float(np.sum(amps**2)) / float(np.sum(centers**2)))
    sigma = float(rng.uniform(0.5, 2.0))
    return Geneo(KernelSpec(sigma, tuple(zip(amps, centers)), exponent=exponent))


class TestKernelSpec:
    def test_constraint_enforced(self):
        with pytest.raises(ValueError):
            KernelSpec(sigma=1.0, terms=((1.0, 0.0),))
        KernelSpec(sigma=1.0, terms=((1.0, 0.0),), unconstrained=True)
        KernelSpec(sigma=1.0, terms=((1.0, 1.0),))  # a == tau is fine

    def test_bad_sigma_and_empty_terms(self):
        with pytest.raises(ValueError):
            KernelSpec(sigma=0.0, terms=((1.0, 1.0),))
        with pytest.raises(ValueError):
            KernelSpec(sigma=1.0, terms=())

    def test_bad_exponent(self):
        with pytest.raises(ValueError):
            KernelSpec(sigma=1.0, terms=((1.0, 1.0),), exponent="cubed")

    def test_radius(self):
        assert KernelSpec(1.0, ((1.0, 1.0),)).radius == 4
        assert KernelSpec(0.5, ((1.0, 1.0),)).radius == 3


class TestSampleKernel:
    def test_centered_blur_values(self):
        spec = KernelSpec(sigma=1.0, terms=((1.0, 0.0),), unconstrained=True)
        grid = sample_kernel(spec)
        r = spec.radius
        assert grid[r, r] == 1.0  # exp(0)
        assert grid[r, r + 1] == pytest.approx(math.exp(-0.5), abs=0.0)

    def test_linear_exponent_matches_at_unit_radius(self):
        # (t - tau) and (t - tau)^2 agree at |t - tau| in {0, 1}
        for exponent in ("squared", "linear"):
            spec = KernelSpec(1.0, ((1.0, 0.0),), exponent=exponent, unconstrained=True)
            grid = sample_kernel(spec)
            r = spec.radius
            assert grid[r, r + 1] == pytest.approx(math.exp(-0.5))

    def test_radial_symmetry_bitwise(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            grid = sample_kernel(random_geneo(rng).kernel)
            assert np.array_equal(grid, grid.T)
            assert np.array_equal(grid, grid[::-1, :])
            assert np.array_equal(grid, grid[:, ::-1])
            assert np.array_equal(grid, np.rot90(grid))

    def test_cancelling_terms_vanish(self):
        spec = KernelSpec(sigma=1.0, terms=((1.0, 1.0), (-1.0, 1.0)), unconstrained=True)
        assert np.all(sample_kernel(spec) == 0.0)


class TestApplyOperator:
    def test_identity(self):
        rng = np.random.default_rng(1)
        img = random_image(rng, 5, 4)
        out = apply_operator(Identity(), img)
        assert out == img
        assert out.pixels is not img.pixels

    def test_degenerate_kernel(self):
        spec = KernelSpec(sigma=1.0, terms=((1.0, 1.0), (-1.0, 1.0)), unconstrained=True)
        with pytest.raises(DegenerateKernelError):
            apply_operator(Geneo(spec), GrayImage([[1.0, 2.0], [3.0, 4.0]]))

    def test_constant_image_interior(self):
        # A nonnegative kernel is a convex combination: interior pixels of a
        # constant image stay put.  Zero padding pulls boundary pixels down,
        # which is what makes the operator exactly equivariant.
        spec = KernelSpec(sigma=1.0, terms=((1.0, 1.0),))
        op = Geneo(spec)
        r = spec.radius
        size = 2 * r + 4
        out = apply_operator(op, GrayImage(np.full((size, size), 7.0)))
        interior = out.pixels[r:-r, r:-r]
        assert np.allclose(interior, 7.0, atol=1e-12)
        assert np.all(out.pixels <= 7.0 + 1e-12)

    def test_non_expansive_sample(self):
        rng = np.random.default_rng(2)
        violations = 0
        for _ in range(200):
            op = random_geneo(rng)
            a = random_image(rng, 10, 10)
            b = random_image(rng, 10, 10)
            lhs = sup_distance(apply_operator(op, a), apply_operator(op, b))
            if lhs > sup_distance(a, b) + 1e-12 * 255.0:
                violations += 1
        assert violations == 0

    def test_dgeneo_two_lipschitz(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            op = DGeneo(random_geneo(rng).kernel, random_geneo(rng).kernel)
            a = random_image(rng, 8, 8)
            b = random_image(rng, 8, 8)
            lhs = sup_distance(apply_operator(op, a), apply_operator(op, b))
            assert lhs <= 2.0 * sup_distance(a, b) + 1e-12 * 255.0

    def test_dihedral_equivariance_exact(self):
        rng = np.random.default_rng(4)
        transforms = [
            lambda m: np.rot90(m, 1),
            lambda m: np.rot90(m, 2),
            lambda m: np.rot90(m, 3),
            lambda m: m[::-1, :],
            lambda m: m[:, ::-1],
            lambda m: m.T,
            lambda m: m[::-1, :].T,
        ]
        ops = [random_geneo(rng), random_geneo(rng, exponent="linear"),
               DGeneo(random_geneo(rng).kernel, random_geneo(rng).kernel)]
        for _ in range(5):
            img = random_image(rng, 9, 9)
            for op in ops:
                base = apply_operator(op, img).pixels
                for g in transforms:
                    transformed = apply_operator(op, GrayImage(np.ascontiguousarray(g(img.pixels))))
                    assert np.array_equal(transformed.pixels, g(base))

    def test_linearity(self):
        rng = np.random.default_rng(5)
        op = random_geneo(rng)
        a = random_image(rng, 8, 8)
        b = random_image(rng, 8, 8)
        alpha, beta = 0.7, -1.3
        mix = GrayImage(alpha * a.pixels + beta * b.pixels)
        lhs = apply_operator(op, mix).pixels
        rhs = alpha * apply_operator(op, a).pixels + beta * apply_operator(op, b).pixels
        scale = np.max(np.abs(rhs)) + 1e-30
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * scale


class TestRescale:
    def test_full_range_unchanged(self):
        img = GrayImage(np.arange(256, dtype=float).reshape(16, 16))
        assert rescale_image(img, 0.0, 255.0) == img

    def test_affine_map(self):
        img = GrayImage(np.array([[2.0, 4.0, 6.0]]))
        out = rescale_image(img, 0.0, 255.0)
        assert out.values.tolist() == [0.0, 127.5, 255.0]

    def test_constant_maps_to_lo(self):
        img = GrayImage(np.full((2, 2), 7.0))
        assert np.all(rescale_image(img, 0.0, 255.0).pixels == 0.0)

    def test_bad_range(self):
        with pytest.raises(ValueError):
            rescale_image(GrayImage([[1.0]]), 1.0, 1.0)


class TestBanks:
    def test_wiring(self):
        b = default_bank("multi-geneo")
        assert isinstance(b.operators[0], Geneo) and isinstance(b.operators[1], Identity)
        b = default_bank("multi-dgeneo")
        assert all(isinstance(op, DGeneo) for op in b.operators)
        assert b.operators[0].first.sigma == 0.5  # (G3 - G4) then (G1 - G2)
        assert b.operators[1].first.sigma == 1.0
        b = default_bank("mix-geneo")
        assert isinstance(b.operators[0], Geneo) and isinstance(b.operators[1], DGeneo)
        assert all(len(default_bank(kind)) == 2 for kind in BANK_KINDS)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            default_bank("quad-geneo")

    def test_rescale_flag(self):
        assert default_bank("mix-geneo").rescale
        assert not default_bank("mix-geneo", rescale=False).rescale

    def test_empty_bank_rejected(self):
        with pytest.raises(ValueError):
            OperatorBank(())

    def test_config_round_trip(self, tmp_path):
        bank = default_bank("multi-dgeneo", rescale=False)
        cfg = bank_to_config(bank)
        again = bank_from_config(json.loads(json.dumps(cfg)))
        assert again == bank

    def test_config_by_kind(self):
        bank = bank_from_config({"kind": "mix-geneo", "rescale": False})
        assert bank == default_bank("mix-geneo", rescale=False)
