"""Training schedules: what fraction of the training nodes an epoch may use."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from ldts.errors import ArgumentError, ConfigError


class PacingKind(str, enum.Enum):
    LINEAR = "linear"
    ROOT = "root"
    GEOM = "geom"

    @classmethod
    def parse(cls, name: str) -> "PacingKind":
        aliases = {"geometric": cls.GEOM}
        key = name.strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown pacing kind {name!r}") from None


@dataclass(frozen=True)
class PacingConfig:
    """Schedule parameters.

    ``lambda0`` is the fraction used at epoch 0 and ``T`` the first epoch at
    which the whole training set is used.
    """

    lambda0: float = 0.25
    T: int = 100
    kind: PacingKind = PacingKind.LINEAR

    def __post_init__(self):
        if isinstance(self.kind, str) and not isinstance(self.kind, PacingKind):
            object.__setattr__(self, "kind", PacingKind.parse(self.kind))
        lam = self.lambda0
        if not (isinstance(lam, (int, float)) and math.isfinite(lam) and 0.0 < lam <= 1.0):
            raise ConfigError(f"lambda0 must lie in (0, 1], got {lam!r}")
        if isinstance(self.T, bool) or not isinstance(self.T, int) or self.T < 1:
            raise ConfigError(f"T must be an integer >= 1, got {self.T!r}")


def pacing_fraction(cfg: PacingConfig, t: int) -> float:
    if isinstance(t, bool) or not isinstance(t, int) or t < 0:
        raise ArgumentError(f"epoch must be a non-negative integer, got {t!r}")
    lam, T = float(cfg.lambda0), cfg.T
    if t >= T:
        return 1.0
    if t == 0:
        return lam
    progress = t / T
    if cfg.kind is PacingKind.LINEAR:
        value = lam + (1.0 - lam) * progress
    elif cfg.kind is PacingKind.ROOT:
        value = math.sqrt(lam**2 + (1.0 - lam**2) * progress)
    else:
        value = 2.0 ** (math.log2(lam) - math.log2(lam) * progress)
    return min(1.0, value)


def sample_count(n: int, fraction: float) -> int:
    """Number of nodes an epoch trains on: ``floor(n * fraction)`` kept in [1, n].

    The product is taken exactly on the binary value of ``fraction`` so that
    float rounding can never push it over an integer boundary.
    """
    if n < 1:
        raise ArgumentError("cannot sample from an empty training set")
    if not (0.0 < fraction <= 1.0):
        raise ArgumentError(f"fraction must lie in (0, 1], got {fraction!r}")
    k = math.floor(Fraction(fraction) * n)
    return max(1, min(n, k))


def pacing_table(cfg: PacingConfig, epochs: int | None = None) -> list[tuple[int, float]]:
    """(epoch, fraction) rows for epochs 0..epochs (default ``T``)."""
    last = cfg.T if epochs is None else epochs
    return [(t, pacing_fraction(cfg, t)) for t in range(last + 1)]
