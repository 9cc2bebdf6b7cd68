"""Command-line pipeline: filter, bifilt, pd, landscape, hilbert, vectorize,
classify, experiment, stability, fixture.

Every command is a pure function of (inputs, config, seed): outputs carry no
timestamps and repeated runs are bitwise identical.  Exit codes: 0 success,
1 computation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cache import FeatureCache, cached_features
from .complexes import (
    build_bifiltration,
    coarsen_bifiltration,
    lower_star_filtration,
    read_bifiltration,
    upper_star_filtration,
    write_bifiltration,
    write_rivet_bifiltration,
)
from .datasets import MNIST_ENV_VAR, find_mnist, first_n_per_class, load_split
from .demo import demo_pair
from .features import write_features_csv
from .image import GrayImage, read_pgm, write_pgm
from .landscapes import (
    DEFAULT_GRID,
    GridSpec,
    hilbert_function,
    landscape_heatmap_pgm,
    landscapes,
    save_landscape,
)
from .learn import TrialProtocol, run_trials
from .operators import BANK_KINDS, apply_operator, default_bank, load_bank_config, rescale_image
from .persistence import compute_persistence, swap_for_upper_star, write_diagram_csv
from .pipeline import LandscapeFeaturizer, PersistenceImageFeaturizer, run_stability


class UsageError(Exception):
    """Bad input or configuration; maps to exit code 2."""


TASKS = {"0vs1": (0, 1), "1vs3": (1, 3), "6vs9": (6, 9), "ten": tuple(range(10))}
FILTRATIONS = {
    "lower": "lower",
    "upper": "upper",
    "mul-G": "multi-geneo",
    "mul-D": "multi-dgeneo",
    "mix-G": "mix-geneo",
}
HOMOLOGY_COLUMNS = ("H0", "H1", "H0+H1")
METHODS = ("L", "PL", "PS")


def _load_image(path) -> GrayImage:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"image file not found: {path}")
    try:
        return read_pgm(path.read_bytes())
    except ValueError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _resolve_bank(args):
    if getattr(args, "bank_config", None):
        cfg_path = Path(args.bank_config)
        if not cfg_path.is_file():
            raise UsageError(f"bank config not found: {cfg_path}")
        try:
            bank = load_bank_config(cfg_path)
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"bad bank config {cfg_path}: {exc}") from exc
    else:
        bank = default_bank(args.bank)
    # flags win over the config file
    if getattr(args, "no_rescale", False):
        bank = type(bank)(bank.operators, rescale=False)
    return bank


def _resolve_grid(args) -> GridSpec:
    if getattr(args, "grid", None):
        lox, loy, hix, hiy, step = args.grid
        try:
            return GridSpec((lox, loy), (hix, hiy), step)
        except ValueError as exc:
            raise UsageError(f"bad grid: {exc}") from exc
    return DEFAULT_GRID


def _resolve_bifiltration(args):
    if getattr(args, "bifilt", None):
        path = Path(args.bifilt)
        if not path.is_file():
            raise UsageError(f"bifiltration file not found: {path}")
        with open(path) as fh:
            b = read_bifiltration(fh)
    else:
        if not getattr(args, "image", None):
            raise UsageError("need either --bifilt or --image")
        image = _load_image(args.image)
        b = build_bifiltration(image, _resolve_bank(args), args.triangle_rule)
    if getattr(args, "bins", None):
        b = coarsen_bifiltration(b, args.bins)
    return b


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_image_csv(path, image: GrayImage) -> None:
    np.savetxt(path, image.pixels, delimiter=",", fmt="%.17g")


def cmd_filter(args) -> int:
    image = _load_image(args.image)
    bank = _resolve_bank(args)
    if len(bank) != 2:
        raise UsageError(f"filter needs a 2-operator bank, got {len(bank)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, op in enumerate(bank.operators, start=1):
        psi = apply_operator(op, image)
        if bank.rescale:
            psi = rescale_image(psi, 0.0, 255.0)
        lo = float(min(psi.pixels.min(), 0.0))
        hi = float(max(psi.pixels.max(), lo + 1.0))
        (out / f"psi{i}.pgm").write_bytes(write_pgm(psi, lo, hi))
        _write_image_csv(out / f"psi{i}.csv", psi)
    return 0


def cmd_bifilt(args) -> int:
    b = _resolve_bifiltration(args)
    with open(args.out, "w") as fh:
        write_bifiltration(b, fh)
    if args.rivet:
        with open(args.rivet, "w") as fh:
            write_rivet_bifiltration(b, fh)
    return 0


def cmd_pd(args) -> int:
    image = _load_image(args.image)
    if args.direction == "lower":
        diagram = compute_persistence(lower_star_filtration(image))
    else:
        diagram = compute_persistence(upper_star_filtration(image))
        if not args.no_swap:
            diagram = swap_for_upper_star(diagram, args.maxval)
    with open(args.out, "w") as fh:
        write_diagram_csv(diagram, fh)
    return 0


def cmd_landscape(args) -> int:
    b = _resolve_bifiltration(args)
    grid = _resolve_grid(args)
    result = landscapes(b, (args.dim,), args.k_max, grid)[args.dim]
    save_landscape(result, args.out)
    if args.pgm:
        for k in range(1, result.k_max + 1):
            Path(f"{args.pgm}_k{k}.pgm").write_bytes(landscape_heatmap_pgm(result, k))
    return 0


def cmd_hilbert(args) -> int:
    b = _resolve_bifiltration(args)
    grid = _resolve_grid(args)
    values = hilbert_function(b, args.dim, grid)
    np.savetxt(args.out, values, delimiter=",", fmt="%d")
    return 0


def _make_featurizer(kind: str, args, n_jobs):
    if kind in ("lower", "upper"):
        return PersistenceImageFeaturizer(
            direction=kind,
            resolution=args.resolution,
            sigma=args.sigma,
            value_range=(args.range_lo, args.range_hi),
            homology="both",
            n_jobs=n_jobs,
        )
    return LandscapeFeaturizer(
        bank=kind,
        bins=args.bins,
        k_max=args.k_max,
        homology="both",
        triangle_rule=args.triangle_rule,
        n_jobs=n_jobs,
    )


def cmd_vectorize(args) -> int:
    images_path = Path(args.images)
    labels_path = Path(args.labels)
    for p in (images_path, labels_path):
        if not p.is_file():
            raise UsageError(f"input file not found: {p}")
    from .image import load_idx_images, load_idx_labels

    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if len(images) != len(labels):
        raise UsageError(f"{len(images)} images but {len(labels)} labels")
    if args.limit:
        images, labels = images[: args.limit], labels[: args.limit]
    kind = FILTRATIONS.get(args.filtration, args.filtration)
    featurizer = _make_featurizer(kind, args, args.threads)
    cache = FeatureCache(args.cache_dir) if args.cache_dir else None
    matrix = cached_features(featurizer, images, cache)
    with open(args.out, "w") as fh:
        write_features_csv(fh, labels, matrix)
    return 0


def cmd_classify(args) -> int:
    from .features import read_features_csv

    path = Path(args.features)
    if not path.is_file():
        raise UsageError(f"features file not found: {path}")
    with open(path) as fh:
        labels, matrix = read_features_csv(fh)
    by_class = {int(c): matrix[labels == c] for c in np.unique(labels)}
    protocol = TrialProtocol(
        method=args.method,
        trials=args.trials,
        train_fraction=args.train_fraction,
        seed=args.seed,
        n_per_class=args.n_per_class,
    )
    report = run_trials(by_class, protocol)
    _write_json(args.out, report.to_dict())
    return 0


def _experiment_features(featurizer, by_class, cache):
    blocks = {}
    for label, imgs in by_class.items():
        full = cached_features(featurizer, imgs, cache)
        half = full.shape[1] // 2
        blocks[label] = {"H0": full[:, :half], "H1": full[:, half:], "H0+H1": full}
    return blocks


def cmd_experiment(args) -> int:
    paths = find_mnist(args.mnist_dir)
    if paths is None:
        raise UsageError(
            f"MNIST IDX files not found; pass --mnist-dir or set {MNIST_ENV_VAR}"
        )
    classes = TASKS[args.task]
    kind = FILTRATIONS[args.filtration]
    featurizer = _make_featurizer(kind, args, args.threads)
    cache = FeatureCache(args.cache_dir) if args.cache_dir else None

    train_images, train_labels = load_split(paths, "train")
    cells = []
    if args.scale == "sample500":
        n = args.n_per_class or 500
        by_class = first_n_per_class(train_images, train_labels, classes, n)
        blocks = _experiment_features(featurizer, by_class, cache)
        for homology in HOMOLOGY_COLUMNS:
            feats = {c: blocks[c][homology] for c in classes}
            for method in METHODS:
                protocol = TrialProtocol(method=method, trials=args.trials, seed=args.seed)
                report = run_trials(feats, protocol, homology=homology)
                cells.append(
                    {
                        "task": args.task,
                        "filtration": args.filtration,
                        "homology": homology,
                        "method": method,
                        "mean_accuracy": report.mean_accuracy,
                        "trials": report.trials,
                        "per_trial": report.per_trial,
                    }
                )
    else:
        test_images, test_labels = load_split(paths, "test")
        train_by_class = {
            c: [im for im, lab in zip(train_images, train_labels) if lab == c] for c in classes
        }
        test_by_class = {
            c: [im for im, lab in zip(test_images, test_labels) if lab == c] for c in classes
        }
        train_blocks = _experiment_features(featurizer, train_by_class, cache)
        test_blocks = _experiment_features(featurizer, test_by_class, cache)
        for homology in HOMOLOGY_COLUMNS:
            train_feats = {c: train_blocks[c][homology] for c in classes}
            test_feats = {c: test_blocks[c][homology] for c in classes}
            for method in METHODS:
                protocol = TrialProtocol(method=method, seed=args.seed)
                report = run_trials(train_feats, protocol, test_feats, homology=homology)
                cells.append(
                    {
                        "task": args.task,
                        "filtration": args.filtration,
                        "homology": homology,
                        "method": method,
                        "mean_accuracy": report.mean_accuracy,
                        "trials": report.trials,
                        "per_trial": report.per_trial,
                    }
                )
    payload = {
        "task": args.task,
        "filtration": args.filtration,
        "scale": args.scale,
        "seed": args.seed,
        "trials": args.trials,
        "cells": cells,
    }
    _write_json(args.out, payload)
    return 0


def cmd_stability(args) -> int:
    grid_step = args.step
    half_cells = math.ceil(520.0 / (2 * grid_step))
    extent = half_cells * grid_step
    grid = GridSpec((-extent, -extent), (extent, extent), grid_step)
    report = run_stability(
        bank_kind=args.bank,
        n_pairs=args.pairs,
        size=args.size,
        seed=args.seed,
        grid=grid,
        n_jobs=args.threads,
    )
    if args.out:
        _write_json(args.out, report)
    print(
        f"stability {args.bank}: {report['n_pairs']} pairs, factor {report['factor']}, "
        f"violations {report['violations']}, min slack {report['min_slack']:.6g}"
    )
    return 0 if report["passed"] else 1


def cmd_fixture(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    phi1, phi2 = demo_pair()
    from .complexes import bifiltration_from_images

    b = bifiltration_from_images(phi1, phi2, args.triangle_rule)
    (out / "phi1.pgm").write_bytes(write_pgm(phi1, 0.0, 255.0))
    (out / "phi2.pgm").write_bytes(write_pgm(phi2, 0.0, 255.0))
    _write_image_csv(out / "phi1.csv", phi1)
    _write_image_csv(out / "phi2.csv", phi2)
    with open(out / "bifiltration.txt", "w") as fh:
        write_bifiltration(b, fh)
    with open(out / "rivet.txt", "w") as fh:
        write_rivet_bifiltration(b, fh)
    return 0


def _add_bank_options(p, with_bins=True):
    p.add_argument("--bank", default="mix-geneo", choices=BANK_KINDS)
    p.add_argument("--bank-config", help="JSON operator-bank config (flags win on conflict)")
    p.add_argument("--no-rescale", action="store_true", help="disable [0,255] rescaling")
    p.add_argument("--triangle-rule", default="square-max", choices=("square-max", "simplex-max"))
    if with_bins:
        p.add_argument("--bins", type=int, default=None, help="coarsen grades into N cells per axis")


def _add_grid_option(p):
    p.add_argument(
        "--grid",
        type=float,
        nargs=5,
        metavar=("LOX", "LOY", "HIX", "HIY", "STEP"),
        help="evaluation grid (default 0 0 260 260 10)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geneotda", description=__doc__)
    parser.add_argument("--version", action="version", version=f"geneotda {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="apply an operator bank to a PGM image")
    p.add_argument("--image", required=True)
    _add_bank_options(p, with_bins=False)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("bifilt", help="build and export a bifiltration")
    p.add_argument("--image")
    p.add_argument("--bifilt", help="re-export an existing bifiltration file")
    _add_bank_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--rivet", help="also write a RIVET-format export here")
    p.set_defaults(func=cmd_bifilt)

    p = sub.add_parser("pd", help="persistence diagram of a star filtration")
    p.add_argument("--image", required=True)
    p.add_argument("--direction", default="lower", choices=("lower", "upper"))
    p.add_argument("--maxval", type=float, default=255.0)
    p.add_argument("--no-swap", action="store_true", help="keep upper-star coordinates negated")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pd)

    p = sub.add_parser("landscape", help="multiparameter persistence landscape")
    p.add_argument("--image")
    p.add_argument("--bifilt")
    _add_bank_options(p)
    p.add_argument("--dim", type=int, default=1, choices=(0, 1))
    p.add_argument("--k-max", type=int, default=1)
    _add_grid_option(p)
    p.add_argument("--out", required=True, help="landscape JSON file")
    p.add_argument("--pgm", help="prefix for per-k heatmap PGMs")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("hilbert", help="Hilbert function on a grid")
    p.add_argument("--image")
    p.add_argument("--bifilt")
    _add_bank_options(p)
    p.add_argument("--dim", type=int, default=1, choices=(0, 1))
    _add_grid_option(p)
    p.add_argument("--out", required=True, help="integer CSV grid")
    p.set_defaults(func=cmd_hilbert)

    p = sub.add_parser("vectorize", help="feature CSV from IDX images")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--limit", type=int, help="use only the first N samples")
    p.add_argument(
        "--filtration", default="mix-G", choices=tuple(FILTRATIONS) + ("multi-geneo", "multi-dgeneo", "mix-geneo")
    )
    _add_bank_options(p)
    p.add_argument("--k-max", type=int, default=1)
    p.add_argument("--resolution", type=int, default=5)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--range-lo", type=float, default=0.0)
    p.add_argument("--range-hi", type=float, default=256.0)
    p.add_argument("--cache-dir")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vectorize, bins=10)

    p = sub.add_parser("classify", help="trial protocol on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--method", default="PL", choices=METHODS)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-class", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("experiment", help="full classification experiment")
    p.add_argument("--task", required=True, choices=tuple(TASKS))
    p.add_argument("--filtration", required=True, choices=tuple(FILTRATIONS))
    p.add_argument("--scale", default="sample500", choices=("sample500", "full"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--n-per-class", type=int)
    p.add_argument("--mnist-dir", help=f"defaults to ${MNIST_ENV_VAR}")
    p.add_argument("--cache-dir")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--k-max", type=int, default=1)
    p.add_argument("--triangle-rule", default="square-max", choices=("square-max", "simplex-max"))
    p.add_argument("--resolution", type=int, default=5)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--range-lo", type=float, default=0.0)
    p.add_argument("--range-hi", type=float, default=256.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("stability", help="landscape stability bound check")
    p.add_argument("--bank", default="multi-geneo", choices=("multi-geneo", "multi-dgeneo", "mix-geneo"))
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--size", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=10.0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("fixture", help="emit the 3x3 worked example")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--triangle-rule", default="square-max", choices=("square-max", "simplex-max"))
    p.set_defaults(func=cmd_fixture)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # computation failure
        print(f"failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
