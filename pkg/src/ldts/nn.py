"""One-hidden-layer ReLU classifier with hand-written gradients.

Row convention: ``X`` is ``(n, input_dim)`` and logits are
``relu(X @ W1.T + b1) @ W2.T + b2``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ldts.errors import ArgumentError, ConfigError, DatasetError, NumericError, ShapeError
from ldts.sampler import RngState, SampleSet

CHECKPOINT_MAGIC = b"LDTS"
CHECKPOINT_VERSION = 1


@dataclass
class ModelParams:
    W1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (classes, hidden)
    b2: np.ndarray  # (classes,)

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name, np.asarray(getattr(self, f.name), dtype=np.float64))
        h, _ = self.W1.shape
        c, h2 = self.W2.shape
        if self.b1.shape != (h,) or h2 != h or self.b2.shape != (c,):
            raise ShapeError(
                f"inconsistent parameter shapes W1{self.W1.shape} b1{self.b1.shape} "
                f"W2{self.W2.shape} b2{self.b2.shape}"
            )

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def class_count(self) -> int:
        return self.W2.shape[0]

    def arrays(self) -> tuple[np.ndarray, ...]:
        return self.W1, self.b1, self.W2, self.b2

    def copy(self) -> "ModelParams":
        return ModelParams(*(a.copy() for a in self.arrays()))

    def allclose(self, other: "ModelParams", atol: float = 0.0) -> bool:
        return all(
            a.shape == b.shape and np.allclose(a, b, rtol=0.0, atol=atol)
            for a, b in zip(self.arrays(), other.arrays())
        )

    def max_abs_diff(self, other: "ModelParams") -> float:
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.arrays(), other.arrays()))


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_params(input_dim: int, hidden_dim: int, class_count: int, rng: RngState) -> ModelParams:
    if min(input_dim, hidden_dim, class_count) < 1:
        raise ArgumentError("all layer dimensions must be >= 1")
    gen = rng.generator
    a1 = glorot_bound(input_dim, hidden_dim)
    a2 = glorot_bound(hidden_dim, class_count)
    W1 = gen.uniform(-a1, a1, size=(hidden_dim, input_dim))
    W2 = gen.uniform(-a2, a2, size=(class_count, hidden_dim))
    return ModelParams(W1, np.zeros(hidden_dim), W2, np.zeros(class_count))


def _hidden(params, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise ShapeError(f"expected features of shape (n, {params.input_dim}), got {X.shape}")
    pre = X @ params.W1.T + params.b1
    return X, pre, np.maximum(pre, 0.0)


def forward(params: ModelParams, X) -> np.ndarray:
    _, _, hidden = _hidden(params, X)
    return hidden @ params.W2.T + params.b2


def _log_softmax(H):
    shifted = H - H.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _check_labels(Y, n, classes):
    Y = np.asarray(Y)
    if Y.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {Y.shape}")
    if not np.issubdtype(Y.dtype, np.integer):
        raise DatasetError("labels must be integers")
    if n and (Y.min() < 0 or Y.max() >= classes):
        raise DatasetError(f"labels must lie in [0, {classes})")
    return Y.astype(np.int64)


def per_sample_loss(H, Y) -> np.ndarray:
    """Cross-entropy of every row, unreduced."""
    H = np.asarray(H, dtype=np.float64)
    Y = _check_labels(Y, H.shape[0], H.shape[1])
    return -_log_softmax(H)[np.arange(H.shape[0]), Y]


def logit_gradient(H, Y, sample: SampleSet) -> np.ndarray:
    """d(mean loss over ``sample``)/dH; rows outside the sample are exactly zero."""
    H = np.asarray(H, dtype=np.float64)
    Y = _check_labels(Y, H.shape[0], H.shape[1])
    idx = sample.indices
    if idx.size == 0:
        raise ArgumentError("empty sample")
    if idx[-1] >= H.shape[0]:
        raise ArgumentError(f"sample index {idx[-1]} out of range for {H.shape[0]} rows")
    dH = np.zeros_like(H)
    sub = np.exp(_log_softmax(H[idx]))
    sub[np.arange(idx.size), Y[idx]] -= 1.0
    dH[idx] = sub / idx.size
    return dH


def masked_backward(params: ModelParams, X, Y, sample: SampleSet) -> ModelParams:
    """Gradient of the mean loss over the sampled rows only."""
    if not isinstance(sample, SampleSet):
        sample = SampleSet(np.asarray(sample))
    X, pre, hidden = _hidden(params, X)
    idx = sample.indices
    if idx[-1] >= X.shape[0]:
        raise ArgumentError(f"sample index {idx[-1]} out of range for {X.shape[0]} rows")
    # restrict to sampled rows up front; off-sample rows would contribute zeros anyway
    Xs, pre_s, hid_s = X[idx], pre[idx], hidden[idx]
    H = hid_s @ params.W2.T + params.b2
    dH = logit_gradient(H, np.asarray(Y)[idx], SampleSet(np.arange(idx.size)))
    dW2 = dH.T @ hid_s
    db2 = dH.sum(axis=0)
    dpre = (dH @ params.W2) * (pre_s > 0.0)
    dW1 = dpre.T @ Xs
    db1 = dpre.sum(axis=0)
    return ModelParams(dW1, db1, dW2, db2)


def sgd_step(params: ModelParams, grads: ModelParams, lr: float) -> ModelParams:
    if not (lr > 0.0 and np.isfinite(lr)):
        raise ConfigError(f"learning rate must be positive and finite, got {lr!r}")
    for name, g in zip(("W1", "b1", "W2", "b2"), grads.arrays()):
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {name}")
    return ModelParams(*(p - lr * g for p, g in zip(params.arrays(), grads.arrays())))


def save_checkpoint(params: ModelParams, path) -> None:
    """Little-endian: magic, version, then the W1 and W2 shapes as u32, then f64 arrays."""
    h, d = params.W1.shape
    c, _ = params.W2.shape
    header = CHECKPOINT_MAGIC + struct.pack("<5I", CHECKPOINT_VERSION, h, d, c, h)
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in params.arrays())
    Path(path).write_bytes(header + body)


def load_checkpoint(path) -> ModelParams:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DatasetError(f"cannot read checkpoint: {exc.strerror}", path) from exc
    if len(raw) < 24 or raw[:4] != CHECKPOINT_MAGIC:
        raise DatasetError("not an LDTS checkpoint", path)
    version, h, d, c, h2 = struct.unpack("<5I", raw[4:24])
    if version != CHECKPOINT_VERSION:
        raise DatasetError(f"unsupported checkpoint version {version}", path)
    if h2 != h:
        raise DatasetError("checkpoint layer shapes disagree", path)
    sizes = [h * d, h, c * h, c]
    if len(raw) != 24 + 8 * sum(sizes):
        raise DatasetError("checkpoint payload has the wrong length", path)
    flat = np.frombuffer(raw, dtype="<f8", offset=24).astype(np.float64)
    parts = np.split(flat, np.cumsum(sizes)[:-1])
    return ModelParams(parts[0].reshape(h, d), parts[1], parts[2].reshape(c, h), parts[3])
