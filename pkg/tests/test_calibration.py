"""Calibration objectives: KL-to-uniform, Bhattacharyya, VWCC, LWCC."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asklearn.calibration import (
    CalibSpec,
    bhattacharyya,
    ce_loss,
    kl_to_uniform,
    likelihood_weight,
    lwcc_logit_grad,
    lwcc_loss,
    variance_weight,
    vwcc_logit_grad,
    vwcc_loss,
)
from asklearn.errors import NotADistribution, ShapeMismatch, TooFewPasses
from asklearn.model import softmax

RNG = np.random.default_rng


def random_distributions(rng, n, k):
    raw = rng.random((n, k)) + 1e-3
    return raw / raw.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------- CalibSpec


def test_calibspec_defaults_to_plain_ce():
    spec = CalibSpec()
    assert spec.kind == "none"
    assert spec.passes == 10


def test_calibspec_rejects_unknown_kind():
    with pytest.raises(ValueError):
        CalibSpec(kind="focal")


def test_calibspec_rejects_negative_weight():
    with pytest.raises(ValueError):
        CalibSpec(kind="lwcc", weight=-0.5)


def test_calibspec_vwcc_needs_two_passes():
    with pytest.raises(TooFewPasses):
        CalibSpec(kind="vwcc", passes=1)
    CalibSpec(kind="vwcc", passes=2)  # boundary is legal


# ------------------------------------------------------------ kl_to_uniform


def test_kl_uniform_of_uniform_is_zero():
    assert kl_to_uniform([0.5, 0.5]) == pytest.approx(0.0, abs=1e-15)


def test_kl_uniform_hand_value():
    # 0.5 ln(0.5/0.9) + 0.5 ln(0.5/0.1) = ln(5/3)
    assert kl_to_uniform([0.9, 0.1]) == pytest.approx(math.log(5 / 3), abs=1e-12)


def test_kl_uniform_rejects_bad_mass():
    with pytest.raises(NotADistribution):
        kl_to_uniform([0.7, 0.4])


def test_kl_uniform_clamps_zero_entries():
    val = kl_to_uniform([1.0, 0.0])
    expected = 0.5 * math.log(0.5 / 1.0) + 0.5 * math.log(0.5 / 1e-12)
    assert val == pytest.approx(expected, rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
@settings(max_examples=200, deadline=None)
def test_kl_uniform_nonnegative_and_matches_direct_sum(seed, k):
    p = random_distributions(RNG(seed), 1, k)[0]
    val = kl_to_uniform(p)
    direct = sum((1 / k) * math.log((1 / k) / pi) for pi in p)
    assert val >= -1e-15
    assert val == pytest.approx(direct, abs=1e-12)


# ------------------------------------------------------------ bhattacharyya


def test_bc_identical_is_one():
    p = [0.2, 0.3, 0.5]
    assert bhattacharyya(p, p) == pytest.approx(1.0, abs=1e-12)


def test_bc_disjoint_is_zero():
    assert bhattacharyya([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0, abs=1e-15)


def test_bc_hand_value():
    expected = math.sqrt(0.45) + math.sqrt(0.05)
    assert bhattacharyya([0.5, 0.5], [0.9, 0.1]) == pytest.approx(expected, abs=1e-12)


def test_bc_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        bhattacharyya([0.5, 0.5], [0.2, 0.3, 0.5])


def test_bc_symmetric_over_many_pairs():
    rng = RNG(7)
    for _ in range(1000):
        k = int(rng.integers(2, 10))
        p, q = random_distributions(rng, 2, k)
        assert abs(bhattacharyya(p, q) - bhattacharyya(q, p)) < 1e-12
        assert abs(bhattacharyya(p, p) - 1.0) < 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(2, 10))
@settings(max_examples=200, deadline=None)
def test_bc_bounded(seed, k):
    p, q = random_distributions(RNG(seed), 2, k)
    assert 0.0 <= bhattacharyya(p, q) <= 1.0 + 1e-12


# ---------------------------------------------------------- variance weight


def test_variance_weight_zero_on_agreement():
    passes = np.tile([[0.1, 0.6, 0.3]], (5, 1))
    assert variance_weight(passes) == pytest.approx(0.0, abs=1e-12)


def test_variance_weight_hand_value():
    # mean of [1,0] and [0,1] is [.5,.5]; BC of each pass with it is sqrt(.5)
    alpha = variance_weight([[1.0, 0.0], [0.0, 1.0]])
    assert alpha == pytest.approx(1.0 - math.sqrt(0.5), abs=1e-12)


def test_variance_weight_needs_two_passes():
    with pytest.raises(TooFewPasses):
        variance_weight([[0.5, 0.5]])


def test_variance_weight_pass_order_irrelevant():
    rng = RNG(3)
    passes = random_distributions(rng, 6, 4)
    base = variance_weight(passes)
    for _ in range(10):
        assert variance_weight(rng.permutation(passes)) == pytest.approx(base, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_variance_weight_in_unit_interval(seed):
    rng = RNG(seed)
    passes = random_distributions(rng, int(rng.integers(2, 8)), int(rng.integers(2, 6)))
    assert 0.0 <= variance_weight(passes) <= 1.0


# -------------------------------------------------------------------- vwcc


def test_vwcc_identical_passes_is_t_times_ce():
    rng = RNG(11)
    probs = random_distributions(rng, 9, 4)
    labels = rng.integers(0, 4, size=9)
    t = 6
    stack = np.tile(probs[None], (t, 1, 1))
    loss, alphas = vwcc_loss(stack, labels)
    assert np.allclose(alphas, 0.0, atol=1e-12)
    assert loss == pytest.approx(t * ce_loss(probs, labels), abs=1e-9)


def test_vwcc_hand_value():
    stack = np.array([[[0.5, 0.5]], [[0.5, 0.5]]])
    loss, alphas = vwcc_loss(stack, [0])
    assert alphas[0] == pytest.approx(0.0, abs=1e-12)
    assert loss == pytest.approx(2 * math.log(2), abs=1e-12)


def test_vwcc_alpha_matches_scalar_helper():
    rng = RNG(5)
    stack = np.stack([random_distributions(rng, 4, 3) for _ in range(7)])
    _, alphas = vwcc_loss(stack, rng.integers(0, 3, size=4))
    for i in range(4):
        assert alphas[i] == pytest.approx(variance_weight(stack[:, i]), abs=1e-12)


def test_vwcc_shape_guards():
    with pytest.raises(ShapeMismatch):
        vwcc_loss(np.full((4, 3), 1 / 3), [0, 1, 2, 0])  # missing pass axis
    with pytest.raises(ShapeMismatch):
        vwcc_loss(np.full((2, 3, 4), 0.25), [0, 1])  # 3 samples, 2 labels
    with pytest.raises(ShapeMismatch):
        vwcc_loss(np.full((2, 2, 3), 1 / 3), [0, 5])  # label out of range
    with pytest.raises(TooFewPasses):
        vwcc_loss(np.full((1, 2, 3), 1 / 3), [0, 1])


def test_vwcc_grad_alpha_extremes():
    # alpha 0 leaves pure cross-entropy; alpha 1 leaves pure KL smoothing
    rng = RNG(13)
    stack = np.stack([random_distributions(rng, 5, 4) for _ in range(3)])
    labels = rng.integers(0, 4, size=5)
    onehot = np.zeros((5, 4))
    onehot[np.arange(5), labels] = 1.0

    g0 = vwcc_logit_grad(stack, labels, np.zeros(5))
    assert np.allclose(g0, (stack - onehot[None]) / 5, atol=1e-12)

    g1 = vwcc_logit_grad(stack, labels, np.ones(5))
    assert np.allclose(g1, (stack - 0.25) / 5, atol=1e-12)


def _vwcc_loss_frozen(logits, labels, alphas):
    """Recompute the objective from logits with the weights held fixed."""
    stoch = softmax(logits)
    t, n, k = stoch.shape
    picked = stoch[:, np.arange(n), labels]
    ce = -np.log(np.maximum(picked, 1e-12))
    u = 1.0 / k
    kl = np.sum(u * (np.log(u) - np.log(np.maximum(stoch, 1e-12))), axis=-1)
    per_sample = ((1 - alphas)[None] * ce + alphas[None] * kl).sum(axis=0)
    return float(per_sample.mean())


def _lwcc_loss_frozen(logits, labels, betas, weight):
    probs = softmax(logits)
    n, k = probs.shape
    picked = probs[np.arange(n), labels]
    ce = -np.log(np.maximum(picked, 1e-12))
    u = 1.0 / k
    kl = np.sum(u * (np.log(u) - np.log(np.maximum(probs, 1e-12))), axis=-1)
    return float((ce + weight * betas * kl).mean())


def _central_diff(fn, logits, eps=1e-6):
    grad = np.zeros_like(logits)
    flat = logits.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        hi = fn(logits)
        flat[i] = keep - eps
        lo = fn(logits)
        flat[i] = keep
        grad.reshape(-1)[i] = (hi - lo) / (2 * eps)
    return grad


def test_vwcc_logit_grad_matches_finite_differences():
    rng = RNG(17)
    logits = rng.normal(size=(3, 4, 5))
    labels = rng.integers(0, 5, size=4)
    stoch = softmax(logits)
    _, alphas = vwcc_loss(stoch, labels)
    analytic = vwcc_logit_grad(stoch, labels, alphas)
    numeric = _central_diff(lambda lg: _vwcc_loss_frozen(lg, labels, alphas), logits)
    scale = np.maximum(np.abs(numeric), 1e-8)
    assert np.max(np.abs(analytic - numeric) / scale) < 1e-4


def test_lwcc_logit_grad_matches_finite_differences():
    rng = RNG(19)
    logits = rng.normal(size=(6, 4))
    labels = rng.integers(0, 4, size=6)
    probs = softmax(logits)
    weight = 0.7
    _, betas = lwcc_loss(probs, labels, weight)
    analytic = lwcc_logit_grad(probs, labels, betas, weight)
    numeric = _central_diff(lambda lg: _lwcc_loss_frozen(lg, labels, betas, weight), logits)
    scale = np.maximum(np.abs(numeric), 1e-8)
    assert np.max(np.abs(analytic - numeric) / scale) < 1e-4


# --------------------------------------------------------- likelihood weight


def test_likelihood_weight_correct_prediction():
    assert likelihood_weight([0.9, 0.1], 0, 0) == pytest.approx(0.1, abs=1e-12)


def test_likelihood_weight_incorrect_prediction():
    assert likelihood_weight([0.9, 0.1], 1, 0) == pytest.approx(1.0, abs=1e-15)


def test_likelihood_weight_saturated_correct():
    assert likelihood_weight([1.0, 0.0], 0, 0) == pytest.approx(0.0, abs=1e-15)


# -------------------------------------------------------------------- lwcc


def test_lwcc_zero_weight_is_plain_ce():
    rng = RNG(23)
    probs = random_distributions(rng, 12, 5)
    labels = rng.integers(0, 5, size=12)
    loss, _ = lwcc_loss(probs, labels, 0.0)
    assert loss == pytest.approx(ce_loss(probs, labels), abs=1e-12)


def test_lwcc_confident_correct_approaches_ce():
    eps = 1e-9
    probs = np.array([[1 - eps, eps], [eps, 1 - eps]])
    labels = [0, 1]
    loss, betas = lwcc_loss(probs, labels, 1.0)
    assert np.allclose(betas, eps, atol=1e-12)
    assert loss == pytest.approx(ce_loss(probs, labels), abs=1e-7)


def test_lwcc_hand_value():
    loss, betas = lwcc_loss([[0.9, 0.1]], [1], 1.0)
    assert betas[0] == pytest.approx(1.0, abs=1e-15)  # misprediction
    assert loss == pytest.approx(-math.log(0.1) + math.log(5 / 3), abs=1e-10)


def test_lwcc_guards():
    with pytest.raises(ShapeMismatch):
        lwcc_loss(np.full((3, 1, 2), 0.5), [0, 1, 0], 1.0)
    with pytest.raises(ShapeMismatch):
        lwcc_loss(np.full((3, 2), 0.5), [0, 1], 1.0)
    with pytest.raises(ValueError):
        lwcc_loss(np.full((2, 2), 0.5), [0, 1], -1.0)
