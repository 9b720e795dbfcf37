"""Query batch selection strategies.

The main selector runs k-means++ seeding over gradient embeddings: the
first sample is uniform, every later one is drawn with probability
proportional to its squared Euclidean distance to the nearest sample
already chosen. Seeding only, no Lloyd iterations; the b seeds are the
query batch. Distances are taken on the raw embeddings because the norm
carries the uncertainty signal and normalizing would erase it.

Baselines: entropy (highest predictive entropy first), confidence (lowest
max probability first), and uniform random, all over the same pool ids.
"""

from dataclasses import dataclass

import numpy as np

from .embedding import GradEmbedding
from .errors import BatchTooLarge, NotADistribution, ShapeMismatch

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class QueryBatch:
    """b distinct sample ids chosen for annotation this round."""

    ids: tuple[int, ...]
    strategy: str
    round_index: int = 0

    def __post_init__(self) -> None:
        if len(set(self.ids)) != len(self.ids):
            raise ShapeMismatch("query ids must be distinct")

    def __len__(self) -> int:
        return len(self.ids)


def _resolve_ids(n: int, ids: np.ndarray | None) -> np.ndarray:
    if ids is None:
        return np.arange(n, dtype=np.int64)
    ids = np.asarray(ids, dtype=np.int64)
    if len(ids) != n:
        raise ShapeMismatch(f"{n} rows vs {len(ids)} ids")
    return ids


def kmeanspp_select(
    embeddings: GradEmbedding,
    b: int,
    rng: np.random.Generator,
    *,
    strategy: str = "kmeanspp",
    round_index: int = 0,
) -> QueryBatch:
    """Pick b rows by k-means++ seeding (D-squared sampling).

    After each pick the per-row distance is updated incrementally as the
    min of the previous value and the distance to the new pick, so the
    whole selection is O(b * n * dim). If every remaining row sits at zero
    distance from the chosen set (duplicate embeddings), the next pick
    falls back to uniform over the remaining rows.
    """
    matrix = embeddings.matrix
    n = matrix.shape[0]
    if b > n:
        raise BatchTooLarge(f"batch {b} exceeds {n} candidate rows")
    chosen = np.empty(b, dtype=np.intp)
    taken = np.zeros(n, dtype=bool)

    first = int(rng.integers(n))
    chosen[0] = first
    taken[first] = True
    d2 = np.square(matrix - matrix[first]).sum(axis=1)
    d2[first] = 0.0

    for j in range(1, b):
        total = d2.sum()
        if total > 0.0:
            r = rng.random() * total
            pick = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            if pick >= n or d2[pick] == 0.0:
                # float edge: r landed at or past the last positive mass
                pick = int(np.flatnonzero(d2 > 0.0)[-1])
        else:
            remaining = np.flatnonzero(~taken)
            pick = int(remaining[rng.integers(len(remaining))])
        chosen[j] = pick
        taken[pick] = True
        d2 = np.minimum(d2, np.square(matrix - matrix[pick]).sum(axis=1))
        d2[pick] = 0.0

    ids = embeddings.sample_ids[chosen]
    return QueryBatch(
        ids=tuple(int(i) for i in ids), strategy=strategy, round_index=round_index
    )


def entropy_select(
    probs: np.ndarray,
    b: int,
    *,
    ids: np.ndarray | None = None,
    strategy: str = "entropy",
    round_index: int = 0,
) -> QueryBatch:
    """Top-b rows by predictive entropy, descending; ties to the lower index."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ShapeMismatch("probs must be [n, K]")
    n = probs.shape[0]
    if b > n:
        raise BatchTooLarge(f"batch {b} exceeds {n} candidate rows")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-6):
        raise NotADistribution("prob rows must sum to 1")
    all_ids = _resolve_ids(n, ids)
    entropy = -np.where(probs > 0.0, probs * np.log(np.maximum(probs, PROB_FLOOR)), 0.0).sum(
        axis=1
    )
    order = np.argsort(-entropy, kind="stable")[:b]
    return QueryBatch(
        ids=tuple(int(i) for i in all_ids[order]),
        strategy=strategy,
        round_index=round_index,
    )


def confidence_select(
    probs: np.ndarray,
    b: int,
    *,
    ids: np.ndarray | None = None,
    strategy: str = "confidence",
    round_index: int = 0,
) -> QueryBatch:
    """Bottom-b rows by max class probability, ascending; ties to lower index."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ShapeMismatch("probs must be [n, K]")
    n = probs.shape[0]
    if b > n:
        raise BatchTooLarge(f"batch {b} exceeds {n} candidate rows")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-6):
        raise NotADistribution("prob rows must sum to 1")
    all_ids = _resolve_ids(n, ids)
    order = np.argsort(probs.max(axis=1), kind="stable")[:b]
    return QueryBatch(
        ids=tuple(int(i) for i in all_ids[order]),
        strategy=strategy,
        round_index=round_index,
    )


def random_select(
    pool_ids: np.ndarray,
    b: int,
    rng: np.random.Generator,
    *,
    strategy: str = "random",
    round_index: int = 0,
) -> QueryBatch:
    """Uniform sample of b ids without replacement."""
    pool_ids = np.asarray(pool_ids, dtype=np.int64)
    if b > len(pool_ids):
        raise BatchTooLarge(f"batch {b} exceeds pool of {len(pool_ids)}")
    picked = rng.choice(len(pool_ids), size=b, replace=False)
    return QueryBatch(
        ids=tuple(int(i) for i in pool_ids[picked]),
        strategy=strategy,
        round_index=round_index,
    )
