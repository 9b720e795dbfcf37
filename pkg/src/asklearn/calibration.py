"""Calibration-regularized training objectives.

Both regularizers smooth softmax outputs toward the uniform distribution
via KL(U || p), gated per sample: VWCC by the disagreement across
stochastic forward passes (variance weight), LWCC by the confidence of
correct predictions (likelihood weight). The gate weights are treated as
constants during backprop; only the cross-entropy and KL terms propagate
gradients to the logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotADistribution, ShapeMismatch, TooFewPasses

PROB_FLOOR = 1e-12  # clamp before any log
DIST_ATOL = 1e-6


@dataclass(frozen=True)
class CalibSpec:
    """Which training objective to use.

    kind "none" is plain mean cross-entropy. "lwcc" adds the likelihood
    weighted KL term scaled by `weight`. "vwcc" sums cross-entropy and the
    variance weighted KL term over `passes` stochastic inferences per
    sample (`weight` is unused there; the per-sample variance plays
    that role).
    """

    kind: str = "none"
    weight: float = 1.0
    passes: int = 10

    def __post_init__(self) -> None:
        if self.kind not in ("none", "vwcc", "lwcc"):
            raise ValueError(f"unknown calibration kind {self.kind!r}")
        if self.weight < 0:
            raise ValueError("regularization weight must be >= 0")
        if self.kind == "vwcc" and self.passes < 2:
            raise TooFewPasses("vwcc needs at least 2 stochastic passes")


def _check_distribution(p: np.ndarray, name: str = "p") -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise NotADistribution(f"{name} must be a 1-D probability vector")
    if np.any(p < -DIST_ATOL) or abs(float(p.sum()) - 1.0) > DIST_ATOL:
        raise NotADistribution(f"{name} has negative mass or does not sum to 1")
    return p


def kl_to_uniform(p) -> float:
    """KL(U || p) = sum_k (1/K) ln((1/K) / p_k), in nats.

    Zero iff p is uniform. Entries are clamped at 1e-12 before the log.
    """
    p = _check_distribution(p)
    k = len(p)
    u = 1.0 / k
    return float(np.sum(u * (np.log(u) - np.log(np.maximum(p, PROB_FLOOR)))))


def bhattacharyya(p, q) -> float:
    """Overlap sum_k sqrt(p_k q_k), in [0, 1]; 1 iff p == q."""
    p = _check_distribution(p, "p")
    q = _check_distribution(q, "q")
    if p.shape != q.shape:
        raise ShapeMismatch(f"p has {p.shape[0]} classes, q has {q.shape[0]}")
    return float(np.sqrt(np.maximum(p, 0.0) * np.maximum(q, 0.0)).sum())


def variance_weight(stochastic_probs) -> float:
    """Disagreement across stochastic passes for one sample.

    1 - mean Bhattacharyya overlap between each pass and the mean
    distribution, clamped to [0, 1]; 0 when all passes agree exactly.
    """
    stack = np.asarray(stochastic_probs, dtype=np.float64)
    if stack.ndim != 2 or stack.shape[0] < 2:
        raise TooFewPasses("need a [T, K] stack with T >= 2")
    return float(_variance_weights(stack[:, None, :])[0])


def _variance_weights(stoch: np.ndarray) -> np.ndarray:
    """Vectorized variance weights for a [T, n, K] stack -> [n]."""
    mean = stoch.mean(axis=0)  # [n, K]
    bc = np.sqrt(np.maximum(stoch, 0.0) * np.maximum(mean, 0.0)[None]).sum(axis=2)
    return np.clip(1.0 - bc.mean(axis=0), 0.0, 1.0)


def _kl_to_uniform_rows(probs: np.ndarray) -> np.ndarray:
    k = probs.shape[-1]
    u = 1.0 / k
    return np.sum(u * (np.log(u) - np.log(np.maximum(probs, PROB_FLOOR))), axis=-1)


def _check_labels(labels: np.ndarray, k: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ShapeMismatch("labels must be 1-D")
    if len(labels) and (labels.min() < 0 or labels.max() >= k):
        raise ShapeMismatch(f"labels outside {{0..{k - 1}}}")
    return labels.astype(np.intp)


def ce_loss(probs: np.ndarray, labels) -> float:
    """Mean cross-entropy -ln p(y|x) in nats, probabilities clamped."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = _check_labels(labels, probs.shape[1])
    if len(labels) != len(probs):
        raise ShapeMismatch(f"{len(probs)} rows vs {len(labels)} labels")
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, PROB_FLOOR)).mean())


def ce_logit_grad(probs: np.ndarray, labels) -> np.ndarray:
    """d(mean CE)/d(logits) = (p - onehot(y)) / n."""
    labels = np.asarray(labels, dtype=np.intp)
    grad = probs.copy()
    grad[np.arange(len(labels)), labels] -= 1.0
    return grad / len(labels)


def vwcc_loss(stochastic_probs, true_labels) -> tuple[float, np.ndarray]:
    """Variance weighted objective over a [T, n, K] stack of pass outputs.

    Per sample i with variance weight a_i, sums over the T passes:
    -(1 - a_i) ln p_t(y_i) + a_i KL(U || p_t), then averages over samples.
    Returns (loss, per-sample variance weights). The weights are computed
    from the passes and then frozen (no gradient flows through them).
    """
    stoch = np.asarray(stochastic_probs, dtype=np.float64)
    if stoch.ndim != 3:
        raise ShapeMismatch(f"expected [T, n, K], got shape {stoch.shape}")
    t, n, k = stoch.shape
    if t < 2:
        raise TooFewPasses(f"need T >= 2 passes, got {t}")
    labels = _check_labels(true_labels, k)
    if len(labels) != n:
        raise ShapeMismatch(f"{n} samples vs {len(labels)} labels")
    alphas = _variance_weights(stoch)
    picked = stoch[:, np.arange(n), labels]  # [T, n]
    ce_terms = -np.log(np.maximum(picked, PROB_FLOOR))
    kl_terms = _kl_to_uniform_rows(stoch)  # [T, n]
    per_sample = ((1.0 - alphas)[None] * ce_terms + alphas[None] * kl_terms).sum(axis=0)
    return float(per_sample.mean()), alphas


def vwcc_logit_grad(
    stochastic_probs: np.ndarray, true_labels, alphas: np.ndarray
) -> np.ndarray:
    """Gradient of vwcc_loss w.r.t. the per-pass logits, [T, n, K].

    With the variance weights frozen, pass t of sample i contributes
    ((1 - a_i)(p_t - onehot(y_i)) + a_i (p_t - 1/K)) / n.
    """
    stoch = np.asarray(stochastic_probs, dtype=np.float64)
    t, n, k = stoch.shape
    labels = np.asarray(true_labels, dtype=np.intp)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    a = alphas[None, :, None]
    grad = (1.0 - a) * (stoch - onehot[None]) + a * (stoch - 1.0 / k)
    return grad / n


def likelihood_weight(p, true_label: int, predicted_label: int) -> float:
    """(1 - max_k p_k) when the prediction is correct, else 1."""
    p = _check_distribution(p)
    if int(true_label) == int(predicted_label):
        return float(1.0 - p.max())
    return 1.0


def lwcc_loss(probs, true_labels, weight: float) -> tuple[float, np.ndarray]:
    """Likelihood weighted objective: mean of -ln p(y_i) + weight * b_i * KL(U || p_i).

    b_i is 1 - max p for confidently-judged correct predictions and 1 for
    incorrect ones, so only wrong or uncertain predictions are smoothed.
    Returns (loss, per-sample likelihood weights); weights are frozen for
    backprop.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ShapeMismatch(f"expected [n, K], got shape {probs.shape}")
    if weight < 0:
        raise ValueError("weight must be >= 0")
    n, k = probs.shape
    labels = _check_labels(true_labels, k)
    if len(labels) != n:
        raise ShapeMismatch(f"{n} rows vs {len(labels)} labels")
    predicted = probs.argmax(axis=1)
    max_p = probs.max(axis=1)
    betas = np.where(predicted == labels, 1.0 - max_p, 1.0)
    picked = probs[np.arange(n), labels]
    per_sample = -np.log(np.maximum(picked, PROB_FLOOR)) + weight * betas * _kl_to_uniform_rows(probs)
    return float(per_sample.mean()), betas


def lwcc_logit_grad(
    probs: np.ndarray, true_labels, betas: np.ndarray, weight: float
) -> np.ndarray:
    """Gradient of lwcc_loss w.r.t. logits with frozen likelihood weights:
    ((p - onehot(y)) + weight * b_i * (p - 1/K)) / n."""
    probs = np.asarray(probs, dtype=np.float64)
    n, k = probs.shape
    labels = np.asarray(true_labels, dtype=np.intp)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    return ((probs - onehot) + weight * betas[:, None] * (probs - 1.0 / k)) / n
