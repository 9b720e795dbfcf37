"""Shared fixtures: desk-scale digits IDX files, a tiny synthetic IDX set
for fast engine tests, and the acceptance-criteria reporter."""

import numpy as np
import pytest
from sklearn.datasets import load_digits

from asklearn.data import expand_pool, write_idx
from asklearn.engine import ExperimentConfig

DIGITS_TRAIN_COUNT = 1100
DIGITS_SHUFFLE_SEED = 0
DIGITS_EXPAND_FACTOR = 3
DIGITS_EXPAND_SEED = 1

_acceptance_results: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collector for acceptance criteria; results print in the summary."""

    def record(criterion: str, passed: bool, detail: str = "") -> None:
        _acceptance_results.append((criterion, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_acceptance_results):
        status = "PASS" if passed else "FAIL"
        line = f"{criterion} {status}"
        if detail:
            line += f" - {detail}"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def digits_idx(tmp_path_factory):
    """The 8x8 digits set as IDX pairs: 1100 train / 697 test, seed 0,
    train pool expanded 3x with label-preserving variants (3300 images).

    Mirrors scripts/make_digits_idx.py so tests stay hermetic.
    """
    root = tmp_path_factory.mktemp("digits_idx")
    digits = load_digits()
    images = np.clip(np.round(digits.images * (255.0 / 16.0)), 0, 255).astype(np.uint8)
    labels = digits.target.astype(np.uint8)
    perm = np.random.default_rng(DIGITS_SHUFFLE_SEED).permutation(len(images))
    tr, te = perm[:DIGITS_TRAIN_COUNT], perm[DIGITS_TRAIN_COUNT:]
    pool, pool_labels = expand_pool(
        images[tr] / 255.0,
        labels[tr],
        DIGITS_EXPAND_FACTOR,
        np.random.default_rng(DIGITS_EXPAND_SEED),
    )
    pool_u8 = np.clip(np.round(pool * 255.0), 0, 255).astype(np.uint8)
    paths = {
        "train_images": str(root / "train-images-idx3-ubyte"),
        "train_labels": str(root / "train-labels-idx1-ubyte"),
        "test_images": str(root / "test-images-idx3-ubyte"),
        "test_labels": str(root / "test-labels-idx1-ubyte"),
    }
    write_idx(
        pool_u8, pool_labels.astype(np.uint8), paths["train_images"], paths["train_labels"]
    )
    write_idx(images[te], labels[te], paths["test_images"], paths["test_labels"])
    return paths


def _blob_images(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Three visually distinct 6x6 blob classes with pixel noise."""
    labels = rng.integers(0, 3, size=n)
    images = np.zeros((n, 6, 6))
    for i, lab in enumerate(labels):
        base = np.zeros((6, 6))
        if lab == 0:
            base[1:3, 1:3] = 0.9
        elif lab == 1:
            base[3:5, 3:5] = 0.9
        else:
            base[1:5, 2:4] = 0.6
        images[i] = np.clip(base + rng.normal(0.0, 0.08, (6, 6)), 0.0, 1.0)
    return (images * 255.0).round().astype(np.uint8), labels.astype(np.uint8)


@pytest.fixture(scope="session")
def blob_idx(tmp_path_factory):
    """Small 3-class IDX pairs (120 train / 60 test) for fast engine runs."""
    root = tmp_path_factory.mktemp("blob_idx")
    rng = np.random.default_rng(7)
    train_images, train_labels = _blob_images(rng, 120)
    test_images, test_labels = _blob_images(rng, 60)
    paths = {
        "train_images": str(root / "train-images-idx3-ubyte"),
        "train_labels": str(root / "train-labels-idx1-ubyte"),
        "test_images": str(root / "test-images-idx3-ubyte"),
        "test_labels": str(root / "test-labels-idx1-ubyte"),
    }
    write_idx(train_images, train_labels, paths["train_images"], paths["train_labels"])
    write_idx(test_images, test_labels, paths["test_images"], paths["test_labels"])
    return paths


@pytest.fixture()
def blob_config(blob_idx):
    """Factory for small fast configs over the blob dataset."""

    def make(**overrides) -> ExperimentConfig:
        params = dict(
            **blob_idx,
            strategy="asklearn_vwcc",
            seed_size=20,
            query_batch=10,
            budget=30,
            hidden_dims=(16,),
            dropout=0.2,
            calib_passes=3,
            train_epochs=8,
            trials=1,
            seed=5,
            out_dir="",
        )
        params.update(overrides)
        return ExperimentConfig(**params)

    return make
