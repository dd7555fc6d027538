"""Training loops: plain full-batch, absolute-loss curriculum, loss-decrease curriculum."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from ldts.data import Dataset, aggregate_features
from ldts.difficulty import LossRecord, easiest_by_absolute_loss, loss_decrease, to_probability
from ldts.errors import ArgumentError, ConfigError, NumericError
from ldts.nn import ModelParams, forward, init_params, masked_backward, per_sample_loss, sgd_step
from ldts.pacing import PacingConfig, pacing_fraction, sample_count
from ldts.sampler import STREAM_INIT, STREAM_SAMPLE, RngState, SampleSet, sample_without_replacement


class Strategy(str, enum.Enum):
    PLAIN = "plain"
    ABSOLUTE_LOSS = "clgnn"
    LOSS_DECREASE = "ldts"

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        aliases = {"absolute": cls.ABSOLUTE_LOSS, "absloss": cls.ABSOLUTE_LOSS}
        key = name.strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown strategy {name!r}") from None


@dataclass(frozen=True)
class TrainConfig:
    strategy: Strategy = Strategy.LOSS_DECREASE
    pacing: PacingConfig = field(default_factory=PacingConfig)
    lr: float = 0.3
    max_epochs: int = 1000
    patience: int = 50
    hidden_dim: int = 32
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.strategy, str) and not isinstance(self.strategy, Strategy):
            object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if not (self.lr > 0 and math.isfinite(self.lr)):
            raise ConfigError(f"lr must be positive, got {self.lr!r}")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.strategy is not Strategy.PLAIN and self.max_epochs < self.pacing.T:
            raise ConfigError(
                f"max_epochs ({self.max_epochs}) must be at least the schedule length T ({self.pacing.T})"
            )
        if self.hidden_dim < 1:
            raise ConfigError("hidden_dim must be >= 1")


@dataclass(frozen=True)
class EpochReport:
    epoch: int
    sampled_loss: float
    train_loss: float
    val_acc: float
    test_acc: float
    k: int
    clean_sample_fraction: float = float("nan")
    # mean selection probability over clean / noisy train nodes; only the ldts strategy has one
    mean_prob_clean: float = float("nan")
    mean_prob_noisy: float = float("nan")


REPORT_COLUMNS = [f.name for f in fields(EpochReport)]


@dataclass
class EpochState:
    """Everything one epoch computed, handed to the optional ``on_epoch`` hook."""

    epoch: int
    params: ModelParams  # parameters the epoch started from (what the report evaluates)
    updated: ModelParams
    losses: np.ndarray  # per train node, in ``train_index`` order
    decrease: np.ndarray | None
    probabilities: np.ndarray | None
    selection: SampleSet  # positions into ``train_index``
    train_index: np.ndarray
    report: EpochReport


@dataclass
class TrainResult:
    params: ModelParams
    reports: list[EpochReport]
    best_epoch: int

    @property
    def best(self) -> EpochReport:
        return self.reports[self.best_epoch]

    def __iter__(self):
        # allows ``params, reports = train(...)``
        return iter((self.params, self.reports))


class TrainingDiverged(NumericError):
    def __init__(self, message, reports):
        super().__init__(message)
        self.reports = reports


def _accuracy(H, Y):
    return float(np.mean(np.argmax(H, axis=1) == Y))


def evaluate(params: ModelParams, dataset: Dataset, split: str, features=None) -> float:
    idx = dataset.indices(split)
    if idx.size == 0:
        raise ArgumentError(f"split {split!r} is empty")
    X = aggregate_features(dataset) if features is None else features
    return _accuracy(forward(params, X[idx]), dataset.labels[idx])


def _nan_mean(values):
    return float(values.mean()) if values.size else float("nan")


def train(
    config: TrainConfig,
    dataset: Dataset,
    features: np.ndarray | None = None,
    on_epoch: Callable[[EpochState], None] | None = None,
) -> TrainResult:
    """Run one strategy; returns the parameters of the best-validation epoch.

    ``features`` defaults to the relation-aggregated features of ``dataset``.
    Epoch ``t`` trains on ``sample_count(n_train, pacing_fraction(t))`` nodes;
    from ``T`` on every strategy uses the full train split. Training stops
    once ``t > T`` and validation accuracy has not improved for ``patience``
    epochs, or at ``max_epochs``.
    """
    X = aggregate_features(dataset) if features is None else np.asarray(features, dtype=np.float64)
    if X.shape[0] != dataset.n:
        raise ConfigError(f"{X.shape[0]} feature rows for {dataset.n} nodes")
    train_idx, val_idx, test_idx = (dataset.indices(s) for s in ("train", "val", "test"))
    if val_idx.size == 0:
        raise ConfigError("early stopping needs a non-empty validation split")
    Y = dataset.labels
    X_train, Y_train = X[train_idx], Y[train_idx]
    n_train = train_idx.size
    flags = None if dataset.noisy_flags is None else dataset.noisy_flags[train_idx]

    root = RngState(config.seed)
    params = init_params(X.shape[1], config.hidden_dim, dataset.num_classes, root.spawn(STREAM_INIT))
    T = config.pacing.T
    record = None
    reports: list[EpochReport] = []
    best_val, best_epoch, best_params, stale = -1.0, 0, params, 0

    for t in range(config.max_epochs):
        H = forward(params, X)
        losses = per_sample_loss(H[train_idx], Y_train)
        if not np.all(np.isfinite(losses)):
            raise TrainingDiverged(f"non-finite training loss at epoch {t}", reports)
        record = LossRecord.initial(losses) if record is None else record.advance(losses)

        decrease = probs = None
        k = n_train if config.strategy is Strategy.PLAIN else sample_count(
            n_train, pacing_fraction(config.pacing, t))
        if k == n_train:
            selection = SampleSet(np.arange(n_train))
            if config.strategy is Strategy.LOSS_DECREASE:
                decrease = loss_decrease(record)
                probs = to_probability(decrease).probabilities
        elif config.strategy is Strategy.ABSOLUTE_LOSS:
            selection = easiest_by_absolute_loss(losses, k)
        else:
            decrease = loss_decrease(record)
            dist = to_probability(decrease)
            probs = dist.probabilities
            selection = sample_without_replacement(dist, k, root.spawn(STREAM_SAMPLE, t))

        try:
            grads = masked_backward(params, X_train, Y_train, selection)
            updated = sgd_step(params, grads, config.lr)
        except NumericError as exc:
            raise TrainingDiverged(f"epoch {t}: {exc}", reports) from exc

        sel = selection.indices
        report = EpochReport(
            epoch=t,
            sampled_loss=float(losses[sel].mean()),
            train_loss=float(losses.mean()),
            val_acc=_accuracy(H[val_idx], Y[val_idx]),
            test_acc=_accuracy(H[test_idx], Y[test_idx]) if test_idx.size else float("nan"),
            k=int(sel.size),
            clean_sample_fraction=float("nan") if flags is None else float(np.mean(~flags[sel])),
            mean_prob_clean=float("nan") if flags is None or probs is None else _nan_mean(probs[~flags]),
            mean_prob_noisy=float("nan") if flags is None or probs is None else _nan_mean(probs[flags]),
        )
        reports.append(report)
        if on_epoch is not None:
            on_epoch(EpochState(t, params, updated, losses, decrease, probs, selection, train_idx, report))

        if report.val_acc > best_val:
            best_val, best_epoch, best_params, stale = report.val_acc, t, params, 0
        else:
            stale += 1
        params = updated
        if t > T and stale >= config.patience:
            break

    return TrainResult(best_params.copy(), reports, best_epoch)


def _fmt(value):
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def write_telemetry(reports: list[EpochReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow([_fmt(v) for v in asdict(r).values()])


def read_telemetry(path) -> list[EpochReport]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        values = {}
        for f in fields(EpochReport):
            raw = row[f.name]
            values[f.name] = int(raw) if f.type in ("int", int) else (float(raw) if raw else float("nan"))
        out.append(EpochReport(**values))
    return out
