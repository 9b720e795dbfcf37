"""Gradient embeddings for batch selection.

Each sample is represented by the gradient of its cross-entropy loss, taken
at the model's current pseudo-label, with respect to the last-layer weights.
Since the last layer is linear, that gradient is the outer product of the
logit error (p - onehot(pseudo)) with the penultimate activation z, laid out
as K contiguous blocks of length dim(z). The embedding norm scales with the
model's uncertainty about the sample and the direction captures which way
the parameters would move, which is what makes diverse batches in this space
informative ones.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import LabelOutOfRange, ShapeMismatch
from .model import MlpModel


@dataclass(frozen=True)
class GradEmbedding:
    """Embedding matrix [n, num_classes * penultimate_dim] plus bookkeeping."""

    matrix: np.ndarray
    pseudo_labels: np.ndarray
    sample_ids: np.ndarray
    source_round: int = 0

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2:
            raise ShapeMismatch(f"embedding matrix must be 2-d, got {self.matrix.ndim}-d")
        n = self.matrix.shape[0]
        if len(self.pseudo_labels) != n or len(self.sample_ids) != n:
            raise ShapeMismatch(
                f"{n} rows vs {len(self.pseudo_labels)} pseudo-labels "
                f"and {len(self.sample_ids)} ids"
            )

    def __len__(self) -> int:
        return self.matrix.shape[0]


def grad_embed(
    probs: np.ndarray,
    penultimate: np.ndarray,
    pseudo_labels: np.ndarray,
    *,
    sample_ids: np.ndarray | None = None,
    source_round: int = 0,
) -> GradEmbedding:
    """Build last-layer loss-gradient embeddings.

    Row i is the flattened outer product (probs[i] - onehot(pseudo_labels[i]))
    outer penultimate[i], blocked by class: entries [c * d : (c + 1) * d] hold
    (p_c - [pseudo == c]) * z.
    """
    probs = np.asarray(probs, dtype=np.float64)
    penultimate = np.asarray(penultimate, dtype=np.float64)
    pseudo = np.asarray(pseudo_labels, dtype=np.intp)
    if probs.ndim != 2 or penultimate.ndim != 2:
        raise ShapeMismatch("probs and penultimate must both be [n, ...] matrices")
    n, k = probs.shape
    if penultimate.shape[0] != n or len(pseudo) != n:
        raise ShapeMismatch(
            f"got {n} prob rows, {penultimate.shape[0]} activations, {len(pseudo)} labels"
        )
    if len(pseudo) and (pseudo.min() < 0 or pseudo.max() >= k):
        raise LabelOutOfRange(f"pseudo-labels must lie in [0, {k})")
    if sample_ids is None:
        sample_ids = np.arange(n, dtype=np.int64)
    else:
        sample_ids = np.asarray(sample_ids, dtype=np.int64)

    err = probs.copy()
    err[np.arange(n), pseudo] -= 1.0
    # [n, K, 1] * [n, 1, d] -> [n, K, d], flattened to class-blocked rows.
    matrix = (err[:, :, None] * penultimate[:, None, :]).reshape(n, -1)
    return GradEmbedding(
        matrix=matrix,
        pseudo_labels=pseudo,
        sample_ids=sample_ids,
        source_round=source_round,
    )


def verify_against_backprop(model: MlpModel, sample: np.ndarray, pseudo_label: int) -> float:
    """Max relative error between the closed form and autograd-free backprop.

    Runs the sample through the model in eval mode, builds the embedding row,
    and compares it entrywise against the last-layer weight gradient produced
    by the model's own backward pass on the cross-entropy at the pseudo-label.
    The two must agree to numerical precision; this guards the closed form
    against drift if either implementation changes.
    """
    x = np.asarray(sample, dtype=np.float64).reshape(1, -1)
    trace = model.forward(x, mode="eval")
    embed = grad_embed(
        trace.probs, trace.penultimate, np.array([pseudo_label])
    ).matrix[0]

    dlogits = trace.probs.copy()
    dlogits[0, pseudo_label] -= 1.0
    w_grads, _ = model.backward(trace, dlogits)
    # backward returns dW with shape [d, K]; embedding rows are class-blocked.
    reference = w_grads[-1].T.reshape(-1)

    scale = np.maximum(np.abs(reference), 1e-12)
    return float(np.max(np.abs(embed - reference) / scale))
