"""IDX dataset ingestion and labeled/unlabeled pool bookkeeping.

The IDX format is the MNIST distribution format: big-endian headers, magic
0x00000803 for image files (u8 pixels, [count, rows, cols]) and 0x00000801
for label files (u8 labels, [count]).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    BudgetExhausted,
    CountMismatch,
    NotInPool,
    SeedTooLarge,
    ShapeMismatch,
    TruncatedFile,
)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    """An image classification split.

    images: [N, H, W] float64, pixels in [0, 1] (raw u8 divided by 255).
    labels: [N] int64 class indices in {0..num_classes-1}.
    """

    images: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: str
    class_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.images.ndim != 3:
            raise ShapeMismatch(f"images must be [N, H, W], got {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise CountMismatch(
                f"{len(self.images)} images vs {len(self.labels)} labels"
            )
        if len(self.labels) and int(self.labels.max()) >= self.num_classes:
            raise ValueError("label outside {0..num_classes-1}")
        if len(self.images) and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ValueError("pixels must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.images)

    @property
    def height(self) -> int:
        return self.images.shape[1]

    @property
    def width(self) -> int:
        return self.images.shape[2]

    def flat_images(self) -> np.ndarray:
        """[N, H*W] view used at the model boundary."""
        return self.images.reshape(len(self.images), -1)


def _read_be_u32(buf: bytes, offset: int, path: str) -> int:
    if offset + 4 > len(buf):
        raise TruncatedFile(f"{path}: header cut short at byte {offset}")
    return struct.unpack_from(">I", buf, offset)[0]


def load_idx(
    images_path: str,
    labels_path: str,
    *,
    split: str = "train",
    num_classes: int | None = None,
    class_names: tuple[str, ...] | None = None,
) -> Dataset:
    """Load an (images, labels) IDX pair into a normalized Dataset.

    Pixels are divided by 255.0; no mean/std centering. Raises BadMagic,
    TruncatedFile, or CountMismatch on malformed input.
    """
    with open(images_path, "rb") as f:
        raw_img = f.read()
    with open(labels_path, "rb") as f:
        raw_lab = f.read()

    magic = _read_be_u32(raw_img, 0, images_path)
    if magic != IMAGE_MAGIC:
        raise BadMagic(f"{images_path}: magic 0x{magic:08x}, want 0x{IMAGE_MAGIC:08x}")
    n = _read_be_u32(raw_img, 4, images_path)
    rows = _read_be_u32(raw_img, 8, images_path)
    cols = _read_be_u32(raw_img, 12, images_path)
    need = 16 + n * rows * cols
    if len(raw_img) < need:
        raise TruncatedFile(f"{images_path}: {len(raw_img)} bytes, need {need}")

    magic = _read_be_u32(raw_lab, 0, labels_path)
    if magic != LABEL_MAGIC:
        raise BadMagic(f"{labels_path}: magic 0x{magic:08x}, want 0x{LABEL_MAGIC:08x}")
    n_lab = _read_be_u32(raw_lab, 4, labels_path)
    if len(raw_lab) < 8 + n_lab:
        raise TruncatedFile(f"{labels_path}: {len(raw_lab)} bytes, need {8 + n_lab}")
    if n != n_lab:
        raise CountMismatch(f"{n} images vs {n_lab} labels")

    pixels = np.frombuffer(raw_img, dtype=np.uint8, count=n * rows * cols, offset=16)
    images = pixels.reshape(n, rows, cols).astype(np.float64) / 255.0
    labels = np.frombuffer(raw_lab, dtype=np.uint8, count=n, offset=8).astype(np.int64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if n else 0
    return Dataset(
        images=images,
        labels=labels,
        num_classes=num_classes,
        split=split,
        class_names=class_names,
    )


def write_idx(
    images_u8: np.ndarray, labels_u8: np.ndarray, images_path: str, labels_path: str
) -> None:
    """Write a uint8 [N, H, W] image stack and its labels as an IDX pair."""
    images_u8 = np.ascontiguousarray(images_u8, dtype=np.uint8)
    labels_u8 = np.ascontiguousarray(labels_u8, dtype=np.uint8)
    n, rows, cols = images_u8.shape
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        f.write(images_u8.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, len(labels_u8)))
        f.write(labels_u8.tobytes())


def expand_pool(
    images: np.ndarray,
    labels: np.ndarray,
    factor: int,
    rng: np.random.Generator,
    *,
    max_shift: int = 1,
    noise_sigma: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Grow an image pool with label-preserving shifted variants.

    Each of the factor - 1 extra copies of an image is translated by a
    nonzero pixel offset; offsets are drawn per base image without
    replacement from the (2 * max_shift + 1)^2 - 1 grid, so one base never
    yields duplicate variants. Optional Gaussian pixel noise (clipped back
    to [0, 1]) is off by default: the held-out test images are noise-free,
    and a noised train pool would open a train/test gap. The combined pool
    is shuffled so variants of one base do not sit adjacently. Query
    budgets stay meaningful through late rounds only while they are small
    next to the pool; this brings a tiny corpus into that regime without
    touching the test split.
    """
    from .pseudolabel import translate

    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    if images.ndim != 3:
        raise ShapeMismatch(f"images must be [N, H, W], got {images.shape}")
    if len(images) != len(labels):
        raise CountMismatch(f"{len(images)} images vs {len(labels)} labels")
    offsets = [
        (dx, dy)
        for dx in range(-max_shift, max_shift + 1)
        for dy in range(-max_shift, max_shift + 1)
        if (dx, dy) != (0, 0)
    ]
    if not 1 <= factor <= len(offsets) + 1:
        raise ValueError(f"factor must be in [1, {len(offsets) + 1}]")
    # distinct offsets per base: argsort of uniform draws is a random
    # permutation of the offset grid, row-wise
    picks = np.argsort(rng.random((len(images), len(offsets))), axis=1)
    stacks = [images]
    for copy in range(factor - 1):
        moved = np.stack(
            [
                translate(img, *offsets[p])
                for img, p in zip(images, picks[:, copy])
            ]
        )
        if noise_sigma > 0:
            moved = np.clip(
                moved + rng.normal(0.0, noise_sigma, size=moved.shape), 0.0, 1.0
            )
        stacks.append(moved)
    pool = np.concatenate(stacks)
    pool_labels = np.tile(labels, factor)
    order = rng.permutation(len(pool))
    return pool[order], pool_labels[order]


@dataclass(frozen=True)
class PoolState:
    """Disjoint labeled/unlabeled partition of the train indices plus the
    budget ledger. Immutable; commit_query returns the successor state."""

    labeled_ids: tuple[int, ...]
    unlabeled_ids: tuple[int, ...]
    seed_size: int
    budget_remaining: int
    batch_size: int
    rounds_completed: int = 0
    _labeled_set: frozenset[int] = field(init=False, repr=False, compare=False)
    _unlabeled_set: frozenset[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        lab = frozenset(self.labeled_ids)
        unl = frozenset(self.unlabeled_ids)
        if lab & unl:
            raise ValueError("labeled and unlabeled pools overlap")
        if len(lab) != len(self.labeled_ids) or len(unl) != len(self.unlabeled_ids):
            raise ValueError("duplicate ids within a pool")
        if self.budget_remaining < 0:
            raise BudgetExhausted("negative budget")
        object.__setattr__(self, "_labeled_set", lab)
        object.__setattr__(self, "_unlabeled_set", unl)

    @property
    def num_train(self) -> int:
        return len(self.labeled_ids) + len(self.unlabeled_ids)


def init_pools(
    train: Dataset,
    seed_size: int,
    rng: np.random.Generator,
    *,
    budget: int = 0,
    batch_size: int = 0,
) -> PoolState:
    """Draw a uniform random seed set without replacement; the rest is the pool."""
    n = len(train)
    if seed_size > n:
        raise SeedTooLarge(f"seed_size {seed_size} > train size {n}")
    seed_ids = rng.choice(n, size=seed_size, replace=False)
    mask = np.zeros(n, dtype=bool)
    mask[seed_ids] = True
    return PoolState(
        labeled_ids=tuple(int(i) for i in seed_ids),
        unlabeled_ids=tuple(int(i) for i in np.flatnonzero(~mask)),
        seed_size=seed_size,
        budget_remaining=budget,
        batch_size=batch_size,
        rounds_completed=0,
    )


def commit_query(pool: PoolState, query_ids) -> PoolState:
    """Move a full query batch from U to L and decrement the budget."""
    ids = [int(i) for i in query_ids]
    if len(set(ids)) != len(ids):
        raise NotInPool("query contains duplicate ids")
    if len(ids) != pool.batch_size:
        raise NotInPool(
            f"query size {len(ids)} != batch size {pool.batch_size}"
        )
    if pool.batch_size > pool.budget_remaining:
        raise BudgetExhausted(
            f"batch {pool.batch_size} > remaining budget {pool.budget_remaining}"
        )
    for i in ids:
        if i not in pool._unlabeled_set:
            raise NotInPool(f"id {i} is not in the unlabeled pool")
    queried = set(ids)
    return PoolState(
        labeled_ids=pool.labeled_ids + tuple(ids),
        unlabeled_ids=tuple(i for i in pool.unlabeled_ids if i not in queried),
        seed_size=pool.seed_size,
        budget_remaining=pool.budget_remaining - pool.batch_size,
        batch_size=pool.batch_size,
        rounds_completed=pool.rounds_completed + 1,
    )
