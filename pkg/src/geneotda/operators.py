"""Operator banks: identity, GENEO, and DGENEO built from radial kernels.

A GENEO here is a normalized discrete convolution against a radial
Gaussian-mixture kernel; it is non-expansive for the sup norm and commutes
exactly with the dihedral symmetries of a square pixel grid.  A DGENEO is
the difference of two GENEOs (difference of Gaussians), non-expansive up to
a factor 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import GrayImage

S_CONSTRAINT_TOL = 1e-9


class DegenerateKernelError(ValueError):
    """Sampled kernel has zero discrete L1 mass and cannot be normalized."""


@dataclass(frozen=True)
class KernelSpec:
    """Radial mixture kernel: sum_j a_j * gauss(sqrt(x^2+y^2) - tau_j; sigma).

    ``exponent`` selects the Gaussian profile exp(-d^2 / 2 sigma^2)
    ("squared", the default) or the one-sided profile exp(-d / 2 sigma^2)
    ("linear").  Unless ``unconstrained`` is set, the amplitudes and centers
    must satisfy sum a_j^2 == sum tau_j^2 (within tolerance).
    """

    sigma: float
    terms: tuple[tuple[float, float], ...]  # (amplitude a_j, center tau_j)
    exponent: str = "squared"
    unconstrained: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(a), float(t)) for a, t in self.terms))
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.terms:
            raise ValueError("kernel needs at least one (amplitude, center) term")
        if self.exponent not in ("squared", "linear"):
            raise ValueError(f"exponent must be 'squared' or 'linear', got {self.exponent!r}")
        if not self.unconstrained:
            sum_a2 = sum(a * a for a, _ in self.terms)
            sum_t2 = sum(t * t for _, t in self.terms)
            if abs(sum_a2 - sum_t2) > S_CONSTRAINT_TOL * max(1.0, sum_a2):
                raise ValueError(
                    f"sum a_j^2 = {sum_a2} != sum tau_j^2 = {sum_t2}; "
                    "set unconstrained=True to lift the constraint"
                )

    @property
    def radius(self) -> int:
        """Truncation radius ceil(3 sigma + max |tau_j|) in pixels."""
        return math.ceil(3.0 * self.sigma + max(abs(t) for _, t in self.terms))


@dataclass(frozen=True)
class Identity:
    """The identity operator (trivially a GENEO)."""


@dataclass(frozen=True)
class Geneo:
    kernel: KernelSpec


@dataclass(frozen=True)
class DGeneo:
    first: KernelSpec
    second: KernelSpec


Operator = Identity | Geneo | DGeneo


@dataclass(frozen=True)
class OperatorBank:
    """Ordered operators defining one filtration parameter each."""

    operators: tuple[Operator, ...]
    rescale: bool = True

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(self.operators))
        if len(self.operators) < 1:
            raise ValueError("operator bank must contain at least one operator")

    def __len__(self):
        return len(self.operators)


def sample_kernel(spec: KernelSpec) -> np.ndarray:
    """Sample the kernel on the integer grid [-r, r]^2 (odd square array).

    The value at offset (dx, dy) depends only on dx^2 + dy^2, so the array
    is bitwise symmetric under all dihedral symmetries.
    """
    r = spec.radius
    dy, dx = np.ogrid[-r : r + 1, -r : r + 1]
    rad = np.sqrt((dx * dx + dy * dy).astype(np.float64))
    grid = np.zeros((2 * r + 1, 2 * r + 1))
    denom = 2.0 * spec.sigma * spec.sigma
    for a, tau in spec.terms:
        dev = rad - tau
        expo = dev * dev if spec.exponent == "squared" else dev
        grid += a * np.exp(-expo / denom)
    return grid


def _convolve_normalized(pixels: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Zero-padded convolution divided by the kernel's discrete L1 mass.

    Per-pixel sums use math.fsum, which is correctly rounded independently
    of summation order; combined with the bitwise-symmetric kernel this
    makes the operator commute exactly with grid isometries.
    """
    mass = math.fsum(np.abs(kernel).reshape(-1).tolist())
    if mass == 0.0:
        raise DegenerateKernelError("kernel sampled to all zeros (L1 mass 0)")
    k = kernel.shape[0]
    r = k // 2
    h, w = pixels.shape
    padded = np.zeros((h + 2 * r, w + 2 * r))
    padded[r : r + h, r : r + w] = pixels
    windows = sliding_window_view(padded, (k, k))
    # The kernel equals its own flip, so correlation == convolution exactly.
    products = (windows * kernel).reshape(h * w, k * k)
    sums = [math.fsum(row) for row in products.tolist()]
    return np.array(sums).reshape(h, w) / mass


def apply_operator(op: Operator, image: GrayImage) -> GrayImage:
    """Apply one bank operator to an image."""
    if isinstance(op, Identity):
        return GrayImage(image.pixels.copy())
    if isinstance(op, Geneo):
        return GrayImage(_convolve_normalized(image.pixels, sample_kernel(op.kernel)))
    if isinstance(op, DGeneo):
        first = _convolve_normalized(image.pixels, sample_kernel(op.first))
        second = _convolve_normalized(image.pixels, sample_kernel(op.second))
        return GrayImage(first - second)
    raise TypeError(f"not an operator: {op!r}")


def rescale_image(image: GrayImage, lo: float, hi: float) -> GrayImage:
    """Affine min-max map onto [lo, hi]; constant images map to lo."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got {lo} >= {hi}")
    vmin = float(np.min(image.pixels))
    vmax = float(np.max(image.pixels))
    if vmax == vmin:
        return GrayImage(np.full_like(image.pixels, lo))
    scaled = lo + (image.pixels - vmin) * ((hi - lo) / (vmax - vmin))
    return GrayImage(scaled)


# Default kernel parameters.  G0 acts as a Gaussian blur; (G1 - G2) and
# (G3 - G4) are difference-of-Gaussians pairs at two scale pairs.  All
# satisfy the constraint with a single (a=1, tau=1) term.
DEFAULT_KERNELS = {
    "G0": KernelSpec(sigma=1.0, terms=((1.0, 1.0),)),
    "G1": KernelSpec(sigma=1.0, terms=((1.0, 1.0),)),
    "G2": KernelSpec(sigma=2.0, terms=((1.0, 1.0),)),
    "G3": KernelSpec(sigma=0.5, terms=((1.0, 1.0),)),
    "G4": KernelSpec(sigma=1.5, terms=((1.0, 1.0),)),
}

BANK_KINDS = ("multi-geneo", "multi-dgeneo", "mix-geneo", "identity")


def default_bank(kind: str, rescale: bool = True) -> OperatorBank:
    """Build one of the stock two-operator banks.

    multi-geneo:  [Geneo(G0), Identity]
    multi-dgeneo: [DGeneo(G3, G4), DGeneo(G1, G2)]
    mix-geneo:    [Geneo(G0), DGeneo(G3, G4)]
    identity:     [Identity, Identity]
    """
    k = DEFAULT_KERNELS
    if kind == "multi-geneo":
        ops = (Geneo(k["G0"]), Identity())
    elif kind == "multi-dgeneo":
        ops = (DGeneo(k["G3"], k["G4"]), DGeneo(k["G1"], k["G2"]))
    elif kind == "mix-geneo":
        ops = (Geneo(k["G0"]), DGeneo(k["G3"], k["G4"]))
    elif kind == "identity":
        ops = (Identity(), Identity())
    else:
        raise ValueError(f"unknown bank kind {kind!r}, expected one of {BANK_KINDS}")
    return OperatorBank(ops, rescale=rescale)


def _kernel_to_config(spec: KernelSpec) -> dict:
    cfg = {"sigma": spec.sigma, "terms": [list(t) for t in spec.terms]}
    if spec.exponent != "squared":
        cfg["exponent"] = spec.exponent
    if spec.unconstrained:
        cfg["unconstrained"] = True
    return cfg


def _kernel_from_config(cfg: dict) -> KernelSpec:
    return KernelSpec(
        sigma=cfg["sigma"],
        terms=tuple(tuple(t) for t in cfg["terms"]),
        exponent=cfg.get("exponent", "squared"),
        unconstrained=cfg.get("unconstrained", False),
    )


def bank_to_config(bank: OperatorBank) -> dict:
    ops = []
    for op in bank.operators:
        if isinstance(op, Identity):
            ops.append({"type": "identity"})
        elif isinstance(op, Geneo):
            ops.append({"type": "geneo", "kernel": _kernel_to_config(op.kernel)})
        else:
            ops.append(
                {
                    "type": "dgeneo",
                    "first": _kernel_to_config(op.first),
                    "second": _kernel_to_config(op.second),
                }
            )
    return {"rescale": bank.rescale, "operators": ops}


def bank_from_config(cfg: dict) -> OperatorBank:
    """Build a bank from a config dict: either {"kind": ...} or an explicit
    {"operators": [...], "rescale": ...} listing."""
    if "kind" in cfg:
        return default_bank(cfg["kind"], rescale=cfg.get("rescale", True))
    ops = []
    for entry in cfg["operators"]:
        t = entry["type"]
        if t == "identity":
            ops.append(Identity())
        elif t == "geneo":
            ops.append(Geneo(_kernel_from_config(entry["kernel"])))
        elif t == "dgeneo":
            ops.append(DGeneo(_kernel_from_config(entry["first"]), _kernel_from_config(entry["second"])))
        else:
            raise ValueError(f"unknown operator type {t!r}")
    return OperatorBank(tuple(ops), rescale=cfg.get("rescale", True))


def load_bank_config(path) -> OperatorBank:
    with open(path) as fh:
        return bank_from_config(json.load(fh))


def save_bank_config(bank: OperatorBank, path) -> None:
    with open(path, "w") as fh:
        json.dump(bank_to_config(bank), fh, indent=2, sort_keys=True)
        fh.write("\n")
