"""IDX ingestion and pool bookkeeping."""

import struct

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from asklearn.data import (
    IMAGE_MAGIC,
    LABEL_MAGIC,
    Dataset,
    PoolState,
    commit_query,
    expand_pool,
    init_pools,
    load_idx,
    write_idx,
)
from asklearn.errors import (
    BadMagic,
    BudgetExhausted,
    CountMismatch,
    NotInPool,
    SeedTooLarge,
    ShapeMismatch,
    TruncatedFile,
)


@pytest.fixture()
def idx_pair(tmp_path):
    rng = np.random.default_rng(3)
    images = rng.integers(0, 256, size=(17, 5, 4), dtype=np.uint8)
    labels = rng.integers(0, 7, size=17).astype(np.uint8)
    ipath, lpath = str(tmp_path / "imgs"), str(tmp_path / "labs")
    write_idx(images, labels, ipath, lpath)
    return images, labels, ipath, lpath


def test_idx_round_trip(idx_pair):
    images, labels, ipath, lpath = idx_pair
    ds = load_idx(ipath, lpath, split="train")
    assert ds.images.shape == (17, 5, 4)
    assert ds.split == "train"
    assert np.array_equal(ds.labels, labels.astype(np.int64))
    assert np.allclose(ds.images, images / 255.0)
    assert ds.images.min() >= 0.0 and ds.images.max() <= 1.0
    assert ds.num_classes == int(labels.max()) + 1
    assert ds.flat_images().shape == (17, 20)
    assert ds.height == 5 and ds.width == 4


def test_idx_header_layout(idx_pair):
    _, _, ipath, lpath = idx_pair
    with open(ipath, "rb") as f:
        magic, n, rows, cols = struct.unpack(">IIII", f.read(16))
    assert (magic, n, rows, cols) == (IMAGE_MAGIC, 17, 5, 4)
    with open(lpath, "rb") as f:
        magic, n = struct.unpack(">II", f.read(8))
    assert (magic, n) == (LABEL_MAGIC, 17)


def test_load_idx_bad_magic(idx_pair, tmp_path):
    _, _, ipath, lpath = idx_pair
    raw = bytearray(open(ipath, "rb").read())
    raw[3] = 0x99
    bad = tmp_path / "bad_imgs"
    bad.write_bytes(bytes(raw))
    with pytest.raises(BadMagic):
        load_idx(str(bad), lpath)


def test_load_idx_swapped_files_rejected(idx_pair):
    _, _, ipath, lpath = idx_pair
    with pytest.raises(BadMagic):
        load_idx(lpath, ipath)


def test_load_idx_truncated(idx_pair, tmp_path):
    _, _, ipath, lpath = idx_pair
    raw = open(ipath, "rb").read()
    cut = tmp_path / "cut_imgs"
    cut.write_bytes(raw[: len(raw) - 9])
    with pytest.raises(TruncatedFile):
        load_idx(str(cut), lpath)


def test_load_idx_count_mismatch(idx_pair, tmp_path):
    images, labels, ipath, _ = idx_pair
    short_l = tmp_path / "short_labs"
    write_idx(images[:9], labels[:9], str(tmp_path / "short_imgs"), str(short_l))
    with pytest.raises(CountMismatch):
        load_idx(ipath, str(short_l))


def test_dataset_rejects_out_of_range_pixels():
    with pytest.raises(ValueError):
        Dataset(
            images=np.full((2, 3, 3), 1.5),
            labels=np.array([0, 1]),
            num_classes=2,
            split="train",
        )


def test_dataset_rejects_label_outside_classes():
    with pytest.raises(ValueError):
        Dataset(
            images=np.zeros((2, 3, 3)),
            labels=np.array([0, 5]),
            num_classes=2,
            split="train",
        )


def _dataset(n=30):
    return Dataset(
        images=np.zeros((n, 4, 4)),
        labels=np.zeros(n, dtype=np.int64),
        num_classes=2,
        split="train",
    )


def test_init_pools_partition():
    pool = init_pools(_dataset(30), 10, np.random.default_rng(0), budget=20, batch_size=5)
    labeled, unlabeled = set(pool.labeled_ids), set(pool.unlabeled_ids)
    assert len(labeled) == 10 and len(unlabeled) == 20
    assert labeled | unlabeled == set(range(30))
    assert not labeled & unlabeled
    assert pool.budget_remaining == 20
    assert pool.rounds_completed == 0


def test_init_pools_seed_too_large():
    with pytest.raises(SeedTooLarge):
        init_pools(_dataset(5), 6, np.random.default_rng(0))


def test_init_pools_deterministic():
    a = init_pools(_dataset(50), 10, np.random.default_rng(9))
    b = init_pools(_dataset(50), 10, np.random.default_rng(9))
    assert a.labeled_ids == b.labeled_ids


def test_commit_query_moves_batch():
    pool = init_pools(_dataset(30), 10, np.random.default_rng(0), budget=10, batch_size=5)
    query = pool.unlabeled_ids[:5]
    after = commit_query(pool, query)
    assert after.rounds_completed == 1
    assert after.budget_remaining == 5
    assert set(query) <= set(after.labeled_ids)
    assert not set(query) & set(after.unlabeled_ids)
    assert len(after.labeled_ids) == 15
    # original state untouched
    assert pool.rounds_completed == 0 and len(pool.labeled_ids) == 10


def test_commit_query_rejects_bad_batches():
    pool = init_pools(_dataset(30), 10, np.random.default_rng(0), budget=10, batch_size=5)
    with pytest.raises(NotInPool):
        commit_query(pool, pool.unlabeled_ids[:4])  # wrong size
    with pytest.raises(NotInPool):
        commit_query(pool, (pool.unlabeled_ids[0],) * 5)  # duplicates
    with pytest.raises(NotInPool):
        commit_query(pool, pool.labeled_ids[:5])  # already labeled
    with pytest.raises(NotInPool):
        commit_query(pool, (999, 1000, 1001, 1002, 1003))  # unknown ids


def test_commit_query_budget_exhausted():
    pool = init_pools(_dataset(30), 10, np.random.default_rng(0), budget=5, batch_size=5)
    once = commit_query(pool, pool.unlabeled_ids[:5])
    assert once.budget_remaining == 0
    with pytest.raises(BudgetExhausted):
        commit_query(once, once.unlabeled_ids[:5])


def test_pool_state_rejects_overlap():
    with pytest.raises(ValueError):
        PoolState(
            labeled_ids=(0, 1),
            unlabeled_ids=(1, 2),
            seed_size=2,
            budget_remaining=0,
            batch_size=1,
        )


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(20, 60),
    seed_size=st.integers(1, 10),
    batch=st.integers(1, 5),
    rounds=st.integers(1, 4),
    seed=st.integers(0, 2**31),
)
def test_pool_invariants_hold_over_random_commits(n, seed_size, batch, rounds, seed):
    assume(seed_size + batch * rounds <= n)
    rng = np.random.default_rng(seed)
    pool = init_pools(
        _dataset(n), seed_size, rng, budget=batch * rounds, batch_size=batch
    )
    for r in range(rounds):
        query = rng.choice(pool.unlabeled_ids, size=batch, replace=False)
        pool = commit_query(pool, query)
        labeled, unlabeled = set(pool.labeled_ids), set(pool.unlabeled_ids)
        assert not labeled & unlabeled
        assert labeled | unlabeled == set(range(n))
        assert len(pool.labeled_ids) == seed_size + (r + 1) * batch
        assert pool.budget_remaining == batch * rounds - (r + 1) * batch


def test_expand_pool_keeps_originals_and_labels():
    rng = np.random.default_rng(4)
    images = rng.random((12, 8, 8))
    labels = np.arange(12) % 3
    pool, pool_labels = expand_pool(images, labels, 4, np.random.default_rng(0))
    assert pool.shape == (48, 8, 8)
    assert len(pool_labels) == 48
    # originals survive verbatim somewhere in the shuffled pool
    flat = pool.reshape(48, -1)
    for img, lab in zip(images, labels):
        matches = np.flatnonzero(np.all(flat == img.reshape(-1), axis=1))
        assert any(pool_labels[m] == lab for m in matches)
    # every label appears exactly factor times as often as in the base
    base_counts = np.bincount(labels, minlength=3)
    assert np.array_equal(np.bincount(pool_labels, minlength=3), base_counts * 4)


def test_expand_pool_factor_one_is_shuffle_only():
    images = np.random.default_rng(1).random((9, 4, 4))
    labels = np.arange(9)
    pool, pool_labels = expand_pool(images, labels, 1, np.random.default_rng(2))
    assert pool.shape == images.shape
    order = np.argsort(pool_labels)
    assert np.allclose(pool[order], images)


def test_expand_pool_deterministic():
    images = np.random.default_rng(5).random((10, 6, 6))
    labels = np.arange(10) % 2
    a = expand_pool(images, labels, 3, np.random.default_rng(11))
    b = expand_pool(images, labels, 3, np.random.default_rng(11))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_expand_pool_values_stay_in_range():
    images = np.random.default_rng(6).random((15, 5, 5))
    pool, _ = expand_pool(
        images, np.zeros(15, dtype=int), 6, np.random.default_rng(3), noise_sigma=0.5
    )
    assert pool.min() >= 0.0 and pool.max() <= 1.0


def test_expand_pool_rejects_bad_arguments():
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeMismatch):
        expand_pool(np.zeros((4, 16)), np.zeros(4), 2, rng)
    with pytest.raises(CountMismatch):
        expand_pool(np.zeros((4, 4, 4)), np.zeros(5), 2, rng)
    with pytest.raises(ValueError):
        expand_pool(np.zeros((4, 4, 4)), np.zeros(4), 0, rng)


def test_expand_pool_variants_per_base_are_distinct():
    # factor 9 with max_shift 1 uses each of the 8 offsets exactly once
    images = np.random.default_rng(8).random((5, 8, 8))
    pool, _ = expand_pool(images, np.arange(5), 9, np.random.default_rng(1))
    assert pool.shape == (45, 8, 8)
    unique_rows = {row.tobytes() for row in pool.reshape(45, -1)}
    assert len(unique_rows) == 45


def test_expand_pool_factor_capped_by_offset_grid():
    images = np.zeros((3, 4, 4))
    with pytest.raises(ValueError):
        expand_pool(images, np.zeros(3), 10, np.random.default_rng(0))
    with pytest.raises(ValueError):
        expand_pool(
            images, np.zeros(3), 5, np.random.default_rng(0), max_shift=0
        )
