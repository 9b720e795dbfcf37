"""Evaluation metrics: accuracy, expected calibration error, NLL, Brier.

Conventions pinned here because they vary across the literature:
ECE uses equal-width right-closed confidence bins ((i/n, (i+1)/n], zero
assigned to the first bin, 15 bins by default), NLL is in nats with
probabilities clamped at 1e-12, and the Brier score sums squared errors
over classes so each sample contributes a value in [0, 2].
"""

from dataclasses import dataclass

import numpy as np

from .errors import LabelOutOfRange, ShapeMismatch

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    ece: float
    nll: float
    brier: float
    n_bins: int
    n_samples: int


def _checked(probs: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    if probs.ndim != 2:
        raise ShapeMismatch(f"probs must be [n, K], got shape {probs.shape}")
    if labels.ndim != 1 or len(labels) != probs.shape[0]:
        raise ShapeMismatch(f"{probs.shape[0]} prob rows vs labels shape {labels.shape}")
    if len(labels) and (labels.min() < 0 or labels.max() >= probs.shape[1]):
        raise LabelOutOfRange(f"labels must lie in [0, {probs.shape[1]})")
    return probs, labels


def accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of samples whose argmax (ties to lowest index) is the label."""
    probs, labels = _checked(probs, labels)
    return float(np.mean(probs.argmax(axis=1) == labels))


def ece(probs: np.ndarray, labels: np.ndarray, n_bins: int = 15) -> float:
    """Expected calibration error: sum_b (N_b / N) |acc(B_b) - conf(B_b)|.

    Confidence is the max class probability. Bin membership is computed by
    digitize against exact edges rather than multiply-and-floor, so values
    sitting on a boundary land in the closed-right bin regardless of float
    rounding. Empty bins contribute nothing.
    """
    probs, labels = _checked(probs, labels)
    if n_bins < 1:
        raise ShapeMismatch("n_bins must be at least 1")
    conf = probs.max(axis=1)
    correct = (probs.argmax(axis=1) == labels).astype(np.float64)
    edges = np.arange(n_bins + 1) / n_bins
    bins = np.clip(np.digitize(conf, edges, right=True) - 1, 0, n_bins - 1)
    counts = np.bincount(bins, minlength=n_bins).astype(np.float64)
    acc_sums = np.bincount(bins, weights=correct, minlength=n_bins)
    conf_sums = np.bincount(bins, weights=conf, minlength=n_bins)
    filled = counts > 0
    gaps = np.abs(acc_sums[filled] - conf_sums[filled]) / counts[filled]
    return float((counts[filled] / len(labels) * gaps).sum())


def nll(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood in nats, clamped below at 1e-12."""
    probs, labels = _checked(probs, labels)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, PROB_FLOOR)).mean())


def brier(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean over samples of the squared error against the one-hot label.

    Sum-over-classes convention: per-sample range [0, 2], with 2 reached by
    a fully confident wrong prediction.
    """
    probs, labels = _checked(probs, labels)
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(labels)), labels] = 1.0
    return float(np.square(probs - onehot).sum(axis=1).mean())


def evaluate(probs: np.ndarray, labels: np.ndarray, n_bins: int = 15) -> EvalReport:
    """All four metrics over one prediction matrix."""
    probs, labels = _checked(probs, labels)
    return EvalReport(
        accuracy=accuracy(probs, labels),
        ece=ece(probs, labels, n_bins),
        nll=nll(probs, labels),
        brier=brier(probs, labels),
        n_bins=n_bins,
        n_samples=len(labels),
    )
