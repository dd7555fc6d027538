"""Probability-weighted sampling of distinct nodes via Gumbel-top-k."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from ldts.errors import ArgumentError

if TYPE_CHECKING:
    from ldts.difficulty import SelectionDistribution

# Stream tags mixed into the seed sequence so independent consumers never share draws.
STREAM_INIT = 0
STREAM_SAMPLE = 1
STREAM_DATA = 2


@dataclass(frozen=True)
class SampleSet:
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or idx.size == 0:
            raise ArgumentError("a sample set needs at least one index")
        if idx[0] < 0 or (idx.size > 1 and np.any(np.diff(idx) <= 0)):
            raise ArgumentError("sample indices must be distinct, sorted and non-negative")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def k(self) -> int:
        return int(self.indices.size)

    def __len__(self):
        return self.k

    def __iter__(self):
        return iter(self.indices.tolist())

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash(self.indices.tobytes())


@dataclass
class RngState:
    """A PCG64 generator keyed by ``(seed, *stream)``.

    Sub-streams are derived with :meth:`spawn`, so the draws of epoch ``t`` do
    not depend on how many epochs ran before it.
    """

    seed: int
    stream: tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ArgumentError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")
        self.stream = tuple(int(s) for s in self.stream)
        seq = np.random.SeedSequence([int(self.seed), *self.stream])
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def spawn(self, *stream: int) -> "RngState":
        return RngState(self.seed, self.stream + tuple(stream))

    @property
    def state(self) -> dict:
        return self.generator.bit_generator.state

    @state.setter
    def state(self, value: dict):
        self.generator.bit_generator.state = value


def _check_k(k, n):
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise ArgumentError(f"k must be an integer, got {k!r}")
    if k < 1 or k > n:
        raise ArgumentError(f"k must lie in [1, {n}], got {k}")


def gumbel_top_k(log_p: np.ndarray, k: int, gumbel: np.ndarray) -> np.ndarray:
    """Indices of the ``k`` largest ``log_p + gumbel`` along the last axis, sorted ascending."""
    keys = log_p + gumbel
    n = keys.shape[-1]
    if k == n:
        top = np.broadcast_to(np.arange(n), keys.shape)
    else:
        top = np.argpartition(-keys, k - 1, axis=-1)[..., :k]
    return np.sort(top, axis=-1)


def sample_without_replacement(P: "SelectionDistribution", k: int, rng: RngState) -> SampleSet:
    log_p = np.asarray(P.log_probabilities, dtype=np.float64)
    _check_k(k, log_p.size)
    gumbel = rng.generator.gumbel(size=log_p.size)
    return SampleSet(gumbel_top_k(log_p, int(k), gumbel))


def sample_many(P: "SelectionDistribution", k: int, rng: RngState, draws: int) -> np.ndarray:
    """``draws`` independent samples at once, as a ``(draws, k)`` index array."""
    log_p = np.asarray(P.log_probabilities, dtype=np.float64)
    _check_k(k, log_p.size)
    gumbel = rng.generator.gumbel(size=(draws, log_p.size))
    return gumbel_top_k(log_p, int(k), gumbel)
