"""Per-node difficulty: loss decrease between epochs, and the absolute-loss baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ldts.errors import ArgumentError, NumericError, ShapeError
from ldts.sampler import SampleSet


def _vector(values, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeError(f"{name} must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class LossRecord:
    """Per-node losses of the previous and current epoch.

    ``previous`` starts out as all zeros, so the first decrease is just the
    negated loss.
    """

    previous: np.ndarray
    current: np.ndarray
    epoch: int = 0

    def __post_init__(self):
        prev = _vector(self.previous, "previous")
        cur = _vector(self.current, "current")
        if prev.shape != cur.shape:
            raise ShapeError(f"previous has {prev.size} entries but current has {cur.size}")
        object.__setattr__(self, "previous", prev)
        object.__setattr__(self, "current", cur)

    @classmethod
    def initial(cls, current) -> "LossRecord":
        cur = np.asarray(current, dtype=np.float64)
        return cls(np.zeros_like(cur), cur, 0)

    def advance(self, current) -> "LossRecord":
        # every node's previous loss is replaced, sampled or not
        return LossRecord(self.current, current, self.epoch + 1)


@dataclass(frozen=True)
class SelectionDistribution:
    probabilities: np.ndarray
    log_probabilities: np.ndarray

    def __len__(self):
        return int(self.probabilities.size)


def loss_decrease(record: LossRecord) -> np.ndarray:
    return record.previous - record.current


def to_probability(D) -> SelectionDistribution:
    """Softmax of the loss decreases, so nodes whose loss fell most get picked most."""
    d = _vector(D, "D")
    shifted = d - d.max()
    log_z = np.log(np.sum(np.exp(shifted)))
    log_p = shifted - log_z
    return SelectionDistribution(np.exp(log_p), log_p)


def easiest_by_absolute_loss(current, k: int) -> SampleSet:
    """The ``k`` lowest-loss nodes; equal losses go to the lower index."""
    loss = _vector(current, "current")
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= loss.size:
        raise ArgumentError(f"k must lie in [1, {loss.size}], got {k!r}")
    order = np.argsort(loss, kind="stable")
    return SampleSet(np.sort(order[:k]))
