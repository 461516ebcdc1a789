"""One-hidden-layer multi-label classifier trained with RMSprop.

The hidden layer is ReLU.  Two output heads are supported: a softmax head
trained with categorical cross-entropy against normalized multi-hot
targets, and an independent-sigmoid head trained with binary
cross-entropy summed over labels.  Prediction thresholds every label and
falls back to the single best label when nothing clears the threshold.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptFile, InvalidLabelRow
from .seeding import derive_rng

OUTPUT_MODES = ("softmax", "sigmoid")


@dataclass
class MlpModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    output_mode: str

    @property
    def n_inputs(self):
        return self.w1.shape[0]

    @property
    def n_hidden(self):
        return self.w1.shape[1]

    @property
    def n_outputs(self):
        return self.w2.shape[1]

    def parameters(self):
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


def init_model(n_inputs, n_hidden, n_outputs, output_mode, seed=0):
    if output_mode not in OUTPUT_MODES:
        raise ValueError(f"output_mode must be one of {OUTPUT_MODES}")
    if min(n_inputs, n_hidden, n_outputs) < 1:
        raise ValueError("layer sizes must be >= 1")
    rng = derive_rng(seed, "mlp-init")
    w1 = _glorot(rng, n_inputs, n_hidden)
    w2 = _glorot(rng, n_hidden, n_outputs)
    return MlpModel(
        w1=w1, b1=np.zeros(n_hidden), w2=w2, b2=np.zeros(n_outputs),
        output_mode=output_mode,
    )


def _affine_forward(model, X):
    z1 = X @ model.w1 + model.b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ model.w2 + model.b2
    return z1, a1, z2


def _softmax(z):
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def forward(model, X):
    """Hidden activations and output probabilities.

    Accepts a single instance (1-D) or a batch (2-D) and returns
    (hidden, scores) with matching dimensionality.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    _, a1, z2 = _affine_forward(model, X)
    probs = _softmax(z2) if model.output_mode == "softmax" else _sigmoid(z2)
    if single:
        return a1[0], probs[0]
    return a1, probs


def loss_and_grads(model, X, Y):
    """Mean batch loss and exact gradients for every parameter.

    Softmax mode: cross-entropy against Y normalized to sum 1 per row
    (rows without a positive label are rejected).  Sigmoid mode: binary
    cross-entropy summed over labels.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.shape != (X.shape[0], model.n_outputs):
        raise ValueError("X must be (batch, n_inputs) and Y (batch, n_outputs)")
    batch = X.shape[0]
    z1, a1, z2 = _affine_forward(model, X)

    if model.output_mode == "softmax":
        row_sums = Y.sum(axis=1)
        if np.any(row_sums <= 0):
            bad = int(np.argmax(row_sums <= 0))
            raise InvalidLabelRow(f"row {bad} has no positive label")
        targets = Y / row_sums[:, None]
        log_norm = np.log(np.exp(z2 - z2.max(axis=1, keepdims=True)).sum(axis=1))
        log_probs = z2 - z2.max(axis=1, keepdims=True) - log_norm[:, None]
        loss = float(-(targets * log_probs).sum() / batch)
        d_z2 = (np.exp(log_probs) - targets) / batch
    else:
        # softplus(z) - y*z == -y*log sig(z) - (1-y)*log sig(-z)
        loss = float((np.logaddexp(0.0, z2) - Y * z2).sum() / batch)
        d_z2 = (_sigmoid(z2) - Y) / batch

    g_w2 = a1.T @ d_z2
    g_b2 = d_z2.sum(axis=0)
    d_a1 = d_z2 @ model.w2.T
    d_z1 = d_a1 * (z1 > 0.0)
    g_w1 = X.T @ d_z1
    g_b1 = d_z1.sum(axis=0)
    return loss, {"w1": g_w1, "b1": g_b1, "w2": g_w2, "b2": g_b2}


@dataclass
class RmspropState:
    accumulators: dict = field(default_factory=dict)

    @classmethod
    def for_model(cls, model):
        return cls({k: np.zeros_like(v) for k, v in model.parameters().items()})


def rmsprop_update(model, state, grads, lr=0.001, rho=0.9, eps=1e-8):
    """In-place step: acc <- rho*acc + (1-rho)*g^2; p <- p - lr*g/(sqrt(acc)+eps)."""
    params = model.parameters()
    for name, g in grads.items():
        acc = state.accumulators[name]
        acc *= rho
        acc += (1.0 - rho) * g * g
        params[name] -= lr * g / (np.sqrt(acc) + eps)


@dataclass(frozen=True)
class TrainHyper:
    batch_size: int = 32
    epochs: int = 50
    hidden_units: int = 128
    lr: float = 0.001
    rho: float = 0.9
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.hidden_units < 1:
            raise ValueError("batch_size, epochs and hidden_units must be >= 1")
        if self.lr <= 0 or not (0.0 <= self.rho < 1.0) or self.eps <= 0:
            raise ValueError("invalid RMSprop hyper-parameters")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def train(X, Y, output_mode, hyper):
    """Fit a fresh model; returns (model, per-epoch mean loss list)."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y must be 2-D with matching row counts")
    if X.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset")
    n = X.shape[0]
    model = init_model(
        X.shape[1], hyper.hidden_units, Y.shape[1], output_mode, seed=hyper.seed
    )
    state = RmspropState.for_model(model)
    losses = []
    for epoch in range(hyper.epochs):
        perm = derive_rng(hyper.seed, "mlp-shuffle", epoch).permutation(n)
        total = 0.0
        for lo in range(0, n, hyper.batch_size):
            idx = perm[lo:lo + hyper.batch_size]
            loss, grads = loss_and_grads(model, X[idx], Y[idx])
            rmsprop_update(model, state, grads, lr=hyper.lr, rho=hyper.rho,
                           eps=hyper.eps)
            total += loss * len(idx)
        losses.append(total / n)
    return model, losses


def default_threshold(model):
    return 1.0 / model.n_outputs if model.output_mode == "softmax" else 0.5


def predict(model, x, threshold=None):
    """Multi-hot prediction for one instance.

    Labels with probability >= threshold are set (the comparison is
    inclusive); if none reach it, the single most probable label is set,
    so the prediction is never empty.
    """
    _, probs = forward(model, x)
    if threshold is None:
        threshold = default_threshold(model)
    out = (probs >= threshold).astype(np.int8)
    if not out.any():
        out[int(np.argmax(probs))] = 1
    return out


def predict_set(model, x, threshold=None):
    """The predicted labels as a set of column indices."""
    return set(int(j) for j in np.flatnonzero(predict(model, x, threshold)))


def predict_batch(model, X, threshold=None):
    _, probs = forward(model, np.atleast_2d(np.asarray(X, dtype=np.float64)))
    if threshold is None:
        threshold = default_threshold(model)
    out = (probs >= threshold).astype(np.int8)
    empty = ~out.any(axis=1)
    if empty.any():
        best = probs[empty].argmax(axis=1)
        out[np.flatnonzero(empty), best] = 1
    return out


def save_model(model, path):
    """Plain-text checkpoint; 17 significant digits round-trip float64."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"mlp {model.output_mode} {model.n_inputs} "
            f"{model.n_hidden} {model.n_outputs}\n"
        )
        for name in ("w1", "b1", "w2", "b2"):
            fh.write(name + "\n")
            block = np.atleast_2d(model.parameters()[name])
            for row in block:
                fh.write(" ".join(f"{x:.17g}" for x in row))
                fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CorruptFile(path, "empty model file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "mlp":
        raise CorruptFile(path, "bad header")
    mode = header[1]
    if mode not in OUTPUT_MODES:
        raise CorruptFile(path, f"unknown output mode {mode!r}")
    try:
        n_in, n_hid, n_out = (int(t) for t in header[2:])
    except ValueError:
        raise CorruptFile(path, "non-integer layer sizes") from None

    shapes = {"w1": (n_in, n_hid), "b1": (1, n_hid),
              "w2": (n_hid, n_out), "b2": (1, n_out)}
    blocks = {}
    pos = 1
    for name in ("w1", "b1", "w2", "b2"):
        if pos >= len(lines) or lines[pos] != name:
            raise CorruptFile(path, f"expected section {name!r} at line {pos + 1}")
        pos += 1
        rows, cols = shapes[name]
        if pos + rows > len(lines):
            raise CorruptFile(path, f"section {name!r} is truncated")
        try:
            block = np.array(
                [[float(t) for t in lines[pos + r].split()] for r in range(rows)]
            )
        except ValueError:
            raise CorruptFile(path, f"section {name!r} has non-numeric values") from None
        if block.shape != (rows, cols):
            raise CorruptFile(path, f"section {name!r} has wrong shape")
        blocks[name] = block
        pos += rows
    if any(line.strip() for line in lines[pos:]):
        raise CorruptFile(path, "trailing data after parameters")
    return MlpModel(
        w1=blocks["w1"], b1=blocks["b1"][0], w2=blocks["w2"], b2=blocks["b2"][0],
        output_mode=mode,
    )
