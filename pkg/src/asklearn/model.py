"""From-scratch multilayer perceptron: ReLU hidden layers, inverted dropout,
softmax output, hand-derived backprop, and Adam training.

The trace exposes the penultimate activation (features feeding the last
linear layer) and the model exposes its last-layer parameters, which the
embedding module needs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import calibration
from .calibration import CalibSpec
from .errors import (
    BadDims,
    DivergedLoss,
    EmptyTrainSet,
    NoStochasticity,
    ShapeMismatch,
)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; rows sum to 1 within 1e-9."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class ForwardTrace:
    """Everything one forward pass records.

    inputs[l] is the input to linear layer l (inputs[0] is the batch,
    inputs[-1] the penultimate features). pre_acts[l] is the pre-ReLU
    output of hidden layer l. masks holds the inverted-dropout masks used
    in train mode (None entries in eval mode).
    """

    logits: np.ndarray
    probs: np.ndarray
    penultimate: np.ndarray
    inputs: list[np.ndarray]
    pre_acts: list[np.ndarray]
    masks: list[np.ndarray | None]
    mode: str


class MlpModel:
    """MLP classifier f(x) with configurable hidden widths.

    layer_dims = (input, hidden..., classes); weights[l] has shape
    (layer_dims[l], layer_dims[l+1]). He-uniform init, zero biases.
    """

    def __init__(
        self,
        layer_dims,
        dropout_rate: float = 0.0,
        rng: np.random.Generator | None = None,
    ) -> None:
        dims = tuple(int(d) for d in layer_dims)
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise BadDims(f"layer_dims must list >=2 positive sizes, got {dims}")
        if not 0.0 <= dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        self.layer_dims = dims
        self.dropout_rate = float(dropout_rate)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / fan_in)
            self.weights.append(self.rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def num_classes(self) -> int:
        return self.layer_dims[-1]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def last_weight(self) -> np.ndarray:
        return self.weights[-1]

    def forward(self, batch: np.ndarray, mode: str = "eval") -> ForwardTrace:
        """Run the network. Eval mode disables dropout and is deterministic."""
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 2 or batch.shape[1] != self.input_dim:
            raise ShapeMismatch(
                f"batch shape {batch.shape}, expected [n, {self.input_dim}]"
            )
        if mode not in ("train", "eval"):
            raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
        a = batch
        inputs = [a]
        pre_acts: list[np.ndarray] = []
        masks: list[np.ndarray | None] = []
        n_hidden = len(self.weights) - 1
        for l in range(n_hidden):
            h = a @ self.weights[l] + self.biases[l]
            pre_acts.append(h)
            a = np.maximum(h, 0.0)
            if mode == "train" and self.dropout_rate > 0.0:
                keep = 1.0 - self.dropout_rate
                mask = (self.rng.random(a.shape) < keep) / keep
                a = a * mask
                masks.append(mask)
            else:
                masks.append(None)
            inputs.append(a)
        logits = a @ self.weights[-1] + self.biases[-1]
        return ForwardTrace(
            logits=logits,
            probs=softmax(logits),
            penultimate=a,
            inputs=inputs,
            pre_acts=pre_acts,
            masks=masks,
            mode=mode,
        )

    def forward_stochastic(self, batch: np.ndarray, passes: int) -> np.ndarray:
        """`passes` independent dropout-mask forward passes (train mode).

        Returns a [passes, n, K] probability stack. Requires an actual
        source of stochasticity: dropout_rate > 0 and passes >= 2.
        """
        if self.dropout_rate == 0.0:
            raise NoStochasticity("dropout_rate is 0; passes would be identical")
        if passes < 2:
            raise ValueError("need at least 2 stochastic passes")
        return np.stack([self.forward(batch, mode="train").probs for _ in range(passes)])

    def backward(
        self, trace: ForwardTrace, dlogits: np.ndarray
    ) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """Backprop a logit gradient to parameter gradients.

        Gradients flow through the dropout masks recorded in the trace, so
        a train-mode trace must be paired with its own backward call.
        """
        if dlogits.shape != trace.logits.shape:
            raise ShapeMismatch(
                f"dlogits {dlogits.shape} vs logits {trace.logits.shape}"
            )
        n_layers = len(self.weights)
        w_grads: list[np.ndarray] = [np.empty(0)] * n_layers
        b_grads: list[np.ndarray] = [np.empty(0)] * n_layers
        delta = dlogits
        w_grads[-1] = trace.inputs[-1].T @ delta
        b_grads[-1] = delta.sum(axis=0)
        da = delta @ self.weights[-1].T
        for l in range(n_layers - 2, -1, -1):
            if trace.masks[l] is not None:
                da = da * trace.masks[l]
            dh = da * (trace.pre_acts[l] > 0.0)
            w_grads[l] = trace.inputs[l].T @ dh
            b_grads[l] = dh.sum(axis=0)
            if l > 0:
                da = dh @ self.weights[l].T
        return w_grads, b_grads

    def save(self, path: str) -> None:
        """Checkpoint: one JSON header line, then little-endian f64 params."""
        header = {
            "layer_dims": list(self.layer_dims),
            "dropout_rate": self.dropout_rate,
            "arrays": [list(w.shape) for w in self.weights]
            + [list(b.shape) for b in self.biases],
        }
        with open(path, "wb") as f:
            f.write(json.dumps(header).encode("utf-8") + b"\n")
            for arr in self.weights + self.biases:
                f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str, rng: np.random.Generator | None = None) -> "MlpModel":
        with open(path, "rb") as f:
            header = json.loads(f.readline().decode("utf-8"))
            body = f.read()
        model = cls(header["layer_dims"], header["dropout_rate"], rng=rng)
        flat = np.frombuffer(body, dtype="<f8")
        offset = 0
        arrays = []
        for shape in header["arrays"]:
            size = int(np.prod(shape)) if shape else 1
            arrays.append(flat[offset : offset + size].reshape(shape).copy())
            offset += size
        n = len(model.weights)
        model.weights = arrays[:n]
        model.biases = arrays[n:]
        return model


class AdamOptimizer:
    """Adam with bias correction; one (m, v) pair per parameter array."""

    def __init__(
        self,
        params: list[np.ndarray],
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def _batch_gradients(
    model: MlpModel, xb: np.ndarray, yb: np.ndarray, kind: str, spec: CalibSpec
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """One minibatch: forward per the objective, loss, parameter grads."""
    if kind == "vwcc":
        # The T stochastic inferences are fused into one forward on the
        # batch tiled T times: dropout masks are drawn per row, so each
        # copy is an independent pass, and one backward covers all T.
        t = spec.passes
        nb = len(xb)
        trace = model.forward(np.tile(xb, (t, 1)), mode="train")
        stoch = trace.probs.reshape(t, nb, model.num_classes)
        loss, alphas = calibration.vwcc_loss(stoch, yb)
        dlogits = calibration.vwcc_logit_grad(stoch, yb, alphas)
        w_grads, b_grads = model.backward(trace, dlogits.reshape(t * nb, -1))
    else:
        trace = model.forward(xb, mode="train")
        if kind == "lwcc":
            loss, betas = calibration.lwcc_loss(trace.probs, yb, spec.weight)
            dlogits = calibration.lwcc_logit_grad(trace.probs, yb, betas, spec.weight)
        else:
            loss = calibration.ce_loss(trace.probs, yb)
            dlogits = calibration.ce_logit_grad(trace.probs, yb)
        w_grads, b_grads = model.backward(trace, dlogits)
    return loss, w_grads, b_grads


def _dataset_loss(
    model: MlpModel, x: np.ndarray, y: np.ndarray, kind: str, spec: CalibSpec
) -> float:
    """Loss over a whole set without updates (eval mode where deterministic)."""
    if kind == "vwcc":
        trace = model.forward(np.tile(x, (spec.passes, 1)), mode="train")
        stoch = trace.probs.reshape(spec.passes, len(x), model.num_classes)
        return calibration.vwcc_loss(stoch, y)[0]
    probs = model.forward(x, mode="eval").probs
    if kind == "lwcc":
        return calibration.lwcc_loss(probs, y, spec.weight)[0]
    return calibration.ce_loss(probs, y)


def train(
    model: MlpModel,
    images: np.ndarray,
    labels: np.ndarray,
    loss_spec: CalibSpec,
    epochs: int = 100,
    batch_size: int = 64,
    learning_rate: float = 1e-3,
    early_stop_tol: float = 1e-4,
    early_stop_patience: int | None = 5,
) -> tuple[MlpModel, float]:
    """Minimize the selected objective with per-minibatch Adam updates.

    Shuffles with the model's own rng. Stops early once the epoch loss has
    not improved on the best seen by early_stop_tol for early_stop_patience
    consecutive epochs. Returns the model (mutated in place) and the last
    epoch's mean training loss.
    """
    x = np.asarray(images, dtype=np.float64)
    y = np.asarray(labels, dtype=np.intp)
    n = len(x)
    if n == 0:
        raise EmptyTrainSet("no labeled samples to train on")
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ShapeMismatch(f"images shape {x.shape}, expected [n, {model.input_dim}]")
    if len(y) != n:
        raise ShapeMismatch(f"{n} images vs {len(y)} labels")

    kind = loss_spec.kind
    if kind == "vwcc" and model.dropout_rate == 0.0:
        # Without dropout every stochastic pass is identical: the variance
        # weights are all zero and the objective is `passes` copies of the
        # cross-entropy, so train on the cross-entropy itself.
        kind = "none"

    if epochs == 0:
        return model, _dataset_loss(model, x, y, kind, loss_spec)

    params = model.weights + model.biases
    opt = AdamOptimizer(params, learning_rate)
    best = np.inf
    stale = 0
    epoch_loss = np.inf
    for _ in range(epochs):
        perm = model.rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            loss, w_grads, b_grads = _batch_gradients(model, x[idx], y[idx], kind, loss_spec)
            opt.step(params, w_grads + b_grads)
            total += loss * len(idx)
        epoch_loss = total / n
        if not np.isfinite(epoch_loss) or not all(
            np.isfinite(p).all() for p in params
        ):
            raise DivergedLoss(f"non-finite loss or parameters (loss={epoch_loss})")
        if epoch_loss < best - early_stop_tol:
            best = epoch_loss
            stale = 0
        else:
            stale += 1
            if early_stop_patience is not None and stale >= early_stop_patience:
                break
    return model, float(epoch_loss)
