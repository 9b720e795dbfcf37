#!/usr/bin/env python3
"""Export the scikit-learn 8x8 digits set as IDX train/test pairs.

The pipeline ingests IDX files (the MNIST distribution format). Full MNIST
is not bundled, so this script materializes the small digits set in the
same container format for desk-scale runs: pixel values 0..16 are rescaled
to 0..255, shuffled once with a fixed seed, and split into train/test.

The raw train split (1100 images) is small next to the default 900-label
budget, which would leave late query rounds choosing among leftovers
instead of exercising the selection strategy. The train pool is therefore
expanded with label-preserving shifted variants (see
asklearn.data.expand_pool); the test split stays untouched originals.
"""

import argparse
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits

from asklearn.data import expand_pool, write_idx

DEFAULT_TRAIN_COUNT = 1100
DEFAULT_SEED = 0
DEFAULT_EXPAND_FACTOR = 3
DEFAULT_EXPAND_SEED = 1


def export_digits(
    out_dir: str,
    train_count: int = DEFAULT_TRAIN_COUNT,
    seed: int = DEFAULT_SEED,
    expand_factor: int = DEFAULT_EXPAND_FACTOR,
    expand_seed: int = DEFAULT_EXPAND_SEED,
) -> dict:
    """Write the four IDX files and return their paths."""
    digits = load_digits()
    images = np.clip(np.round(digits.images * (255.0 / 16.0)), 0, 255).astype(np.uint8)
    labels = digits.target.astype(np.uint8)
    if not 0 < train_count < len(images):
        raise SystemExit(f"train_count must be in (0, {len(images)})")
    perm = np.random.default_rng(seed).permutation(len(images))
    tr, te = perm[:train_count], perm[train_count:]

    pool, pool_labels = expand_pool(
        images[tr] / 255.0,
        labels[tr],
        expand_factor,
        np.random.default_rng(expand_seed),
    )
    pool_u8 = np.clip(np.round(pool * 255.0), 0, 255).astype(np.uint8)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "train_images": str(out / "train-images-idx3-ubyte"),
        "train_labels": str(out / "train-labels-idx1-ubyte"),
        "test_images": str(out / "test-images-idx3-ubyte"),
        "test_labels": str(out / "test-labels-idx1-ubyte"),
    }
    write_idx(
        pool_u8, pool_labels.astype(np.uint8), paths["train_images"], paths["train_labels"]
    )
    write_idx(images[te], labels[te], paths["test_images"], paths["test_labels"])
    return paths


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/digits", help="output directory")
    parser.add_argument(
        "--train-count",
        type=int,
        default=DEFAULT_TRAIN_COUNT,
        help=f"train split size before expansion (default {DEFAULT_TRAIN_COUNT} of 1797)",
    )
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="shuffle seed")
    parser.add_argument(
        "--expand",
        type=int,
        default=DEFAULT_EXPAND_FACTOR,
        help="train pool expansion factor, 1 disables (default "
        f"{DEFAULT_EXPAND_FACTOR})",
    )
    parser.add_argument(
        "--expand-seed",
        type=int,
        default=DEFAULT_EXPAND_SEED,
        help=f"rng seed for the expansion transforms (default {DEFAULT_EXPAND_SEED})",
    )
    args = parser.parse_args()
    paths = export_digits(
        args.out, args.train_count, args.seed, args.expand, args.expand_seed
    )
    for key, path in paths.items():
        print(f"{key}: {path}")


if __name__ == "__main__":
    main()
