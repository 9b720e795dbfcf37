"""Label provision for query batches.

Three oracle kinds: exact (simulated expert returning ground truth), noisy
(a deterministic fraction of each batch corrupted to a uniformly random
incorrect class), and human (blocks until an annotation session has a label
posted for every queried id).

The engine never touches pool ground truth directly; it hands a QueryBatch
to an Oracle and gets labels back. The noisy oracle's corrupted_ids are
bookkeeping for analysis only and are kept out of the training path.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, LabelOutOfRange, UnknownId
from .sampler import QueryBatch

ORACLE_KINDS = ("exact", "noisy", "human")


@dataclass(frozen=True)
class OracleSpec:
    kind: str = "exact"
    noise_ratio: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ORACLE_KINDS:
            raise ConfigInvalid(f"unknown oracle kind {self.kind!r}")
        if not 0.0 <= self.noise_ratio < 1.0:
            raise ConfigInvalid("noise_ratio must lie in [0, 1)")
        if self.kind != "noisy" and self.noise_ratio != 0.0:
            raise ConfigInvalid("noise_ratio only applies to the noisy oracle")


@dataclass(frozen=True)
class LabelAssignment:
    """(sample_id, label) pairs plus which ids were deliberately corrupted."""

    pairs: tuple[tuple[int, int], ...]
    corrupted_ids: frozenset = field(default_factory=frozenset)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.pairs)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(lab for _, lab in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def _true_labels(query: QueryBatch, ground_truth: np.ndarray) -> np.ndarray:
    ground_truth = np.asarray(ground_truth)
    ids = np.asarray(query.ids, dtype=np.int64)
    if len(ids) and (ids.min() < 0 or ids.max() >= len(ground_truth)):
        raise UnknownId(f"query ids outside [0, {len(ground_truth)})")
    return ground_truth[ids]


def annotate_exact(query: QueryBatch, ground_truth: np.ndarray) -> LabelAssignment:
    """Return the true label for every queried id."""
    labels = _true_labels(query, ground_truth)
    return LabelAssignment(
        pairs=tuple((int(i), int(lab)) for i, lab in zip(query.ids, labels))
    )


def corrupted_count(noise_ratio: float, batch_size: int) -> int:
    """How many labels the noisy oracle flips: round(ratio * b), halves up."""
    return int(np.floor(noise_ratio * batch_size + 0.5))


def annotate_noisy(
    query: QueryBatch,
    ground_truth: np.ndarray,
    noise_ratio: float,
    rng: np.random.Generator,
    *,
    num_classes: int,
) -> LabelAssignment:
    """Return true labels with exactly round(ratio * b) of them corrupted.

    Corrupted positions are drawn uniformly without replacement; each gets a
    label uniform over the num_classes - 1 incorrect classes, so a corrupted
    label never equals the truth. The count is deterministic rather than
    per-sample Bernoulli so a stated corruption percentage holds exactly in
    every round.
    """
    labels = _true_labels(query, ground_truth).astype(np.int64)
    b = len(query.ids)
    n_corrupt = min(corrupted_count(noise_ratio, b), b)
    corrupted: set[int] = set()
    if n_corrupt > 0:
        positions = rng.choice(b, size=n_corrupt, replace=False)
        offsets = rng.integers(0, num_classes - 1, size=n_corrupt)
        for pos, off in zip(positions, offsets):
            wrong = int(off) + (int(off) >= int(labels[pos]))
            labels[pos] = wrong
            corrupted.add(int(query.ids[pos]))
    return LabelAssignment(
        pairs=tuple((int(i), int(lab)) for i, lab in zip(query.ids, labels)),
        corrupted_ids=frozenset(corrupted),
    )


def annotate_human(
    query: QueryBatch, session, timeout: float | None = None
) -> LabelAssignment:
    """Block until the annotation session holds a label for every queried id.

    Returns the posted labels verbatim; range enforcement happens at the API
    boundary. Raises SessionClosed if the session shuts down mid-round and
    AnnotationTimeout if a timeout is configured and expires.
    """
    posted = session.await_labels(query.ids, timeout=timeout)
    return LabelAssignment(
        pairs=tuple((int(i), int(posted[i])) for i in query.ids)
    )


class Oracle:
    """The engine's single label pathway.

    Holds the ground-truth labels privately so the rest of the pipeline can
    run on unlabeled views of the pool. seed_labels covers the initial pool:
    the seed set is treated as already expert-annotated under every oracle
    kind, so it always gets true labels.
    """

    def __init__(
        self,
        spec: OracleSpec,
        ground_truth: np.ndarray,
        num_classes: int,
        session=None,
    ) -> None:
        if spec.kind == "human" and session is None:
            raise ConfigInvalid("human oracle needs an annotation session")
        self.spec = spec
        self.num_classes = num_classes
        self.session = session
        self._truth = np.asarray(ground_truth, dtype=np.int64).copy()
        if len(self._truth) and (
            self._truth.min() < 0 or self._truth.max() >= num_classes
        ):
            raise LabelOutOfRange("ground truth labels outside class range")

    def seed_labels(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if len(ids) and (ids.min() < 0 or ids.max() >= len(self._truth)):
            raise UnknownId("seed ids outside dataset")
        return self._truth[ids].copy()

    def annotate(
        self,
        query: QueryBatch,
        rng: np.random.Generator | None = None,
        images: np.ndarray | None = None,
        timeout: float | None = None,
    ) -> LabelAssignment:
        """Label one query batch.

        rng drives the noisy oracle's corruption draws; images (the queried
        samples, [b, H, W] in [0, 1]) are published to the annotation
        session in human mode so the annotator can see what to label.
        """
        if self.spec.kind == "exact":
            return annotate_exact(query, self._truth)
        if self.spec.kind == "noisy":
            if rng is None:
                raise ConfigInvalid("noisy oracle needs an rng")
            return annotate_noisy(
                query,
                self._truth,
                self.spec.noise_ratio,
                rng,
                num_classes=self.num_classes,
            )
        if images is None:
            raise ConfigInvalid("human oracle needs query images to display")
        items = [
            {
                "id": int(i),
                "image": np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8),
            }
            for i, img in zip(query.ids, images)
        ]
        self.session.begin_round(query.round_index, items)
        return annotate_human(query, self.session, timeout=timeout)
