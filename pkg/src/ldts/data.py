"""Synthetic heterogeneous node-classification data, relation-wise aggregation, CSV I/O.

A dataset directory holds:

    features.csv        f0,...,f{d-1}        one row per target node
    labels.csv          node,label           observed (possibly corrupted) labels
    split.csv           node,split           split in {train, val, test}
    edges_<name>.csv    src,dst              one file per relation type
    flags.csv           node,noisy           optional, 1 marks a corrupted train label
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ldts.errors import ConfigError, DatasetError
from ldts.sampler import STREAM_DATA, RngState

TRAIN, VAL, TEST = 0, 1, 2
SPLIT_NAMES = ("train", "val", "test")
_RELATION_NAME = re.compile(r"^[A-Za-z0-9_\-]+$")


@dataclass(eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    split: np.ndarray
    relations: dict[str, np.ndarray] = field(default_factory=dict)
    noisy_flags: np.ndarray | None = None
    num_classes: int | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.split = np.asarray(self.split, dtype=np.int8)
        self.relations = {
            name: np.asarray(edges, dtype=np.int64).reshape(-1, 2)
            for name, edges in sorted(self.relations.items())
        }
        if self.noisy_flags is not None:
            self.noisy_flags = np.asarray(self.noisy_flags, dtype=bool)
        if self.num_classes is None:
            self.num_classes = int(self.labels.max()) + 1 if self.labels.size else 0
        self.validate()

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def validate(self):
        n = self.n
        if self.features.ndim != 2:
            raise DatasetError(f"features must be a matrix, got shape {self.features.shape}")
        if not np.all(np.isfinite(self.features)):
            raise DatasetError("features contain non-finite values")
        if self.labels.shape != (n,):
            raise DatasetError(f"{self.labels.size} labels for {n} feature rows")
        if self.split.shape != (n,):
            raise DatasetError(f"{self.split.size} split entries for {n} feature rows")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DatasetError(f"labels must lie in [0, {self.num_classes})")
        if np.any((self.split < TRAIN) | (self.split > TEST)):
            raise DatasetError("split codes must be train, val or test")
        if not np.any(self.split == TRAIN):
            raise DatasetError("train split is empty")
        for name, edges in self.relations.items():
            if not _RELATION_NAME.match(name):
                raise DatasetError(f"bad relation name {name!r}")
            if edges.size and (edges.min() < 0 or edges.max() >= n):
                raise DatasetError(f"relation {name!r} has an edge endpoint outside [0, {n})")
        if self.noisy_flags is not None and self.noisy_flags.shape != (n,):
            raise DatasetError(f"{self.noisy_flags.size} noise flags for {n} nodes")

    def mask(self, split: str | int) -> np.ndarray:
        code = SPLIT_NAMES.index(split) if isinstance(split, str) else int(split)
        return self.split == code

    def indices(self, split: str | int) -> np.ndarray:
        return np.flatnonzero(self.mask(split))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        same_flags = (self.noisy_flags is None and other.noisy_flags is None) or (
            self.noisy_flags is not None
            and other.noisy_flags is not None
            and np.array_equal(self.noisy_flags, other.noisy_flags)
        )
        return (
            np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.split, other.split)
            and self.num_classes == other.num_classes
            and self.relations.keys() == other.relations.keys()
            and all(np.array_equal(e, other.relations[k]) for k, e in self.relations.items())
            and same_flags
        )


@dataclass(frozen=True)
class SynthConfig:
    n_target: int = 2000
    C: int = 4
    d: int = 16
    cluster_separation: float = 1.5
    noise_fraction: float = 0.3
    aux_types: int = 1
    edges_per_node: int = 5
    homophily: float = 0.7
    train_fraction: float = 0.6
    val_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.C < 2 or self.n_target < self.C:
            raise ConfigError("need n_target >= C >= 2")
        if self.d < 1:
            raise ConfigError("feature dimension must be >= 1")
        if not self.cluster_separation > 0:
            raise ConfigError("cluster_separation must be positive")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise ConfigError("noise fraction must lie in [0, 1)")
        if self.aux_types < 0 or self.edges_per_node < 1:
            raise ConfigError("aux_types must be >= 0 and edges_per_node >= 1")
        if not 0.0 <= self.homophily <= 1.0:
            raise ConfigError("homophily must lie in [0, 1]")
        if not (0 < self.train_fraction and 0 <= self.val_fraction
                and self.train_fraction + self.val_fraction <= 1.0):
            raise ConfigError("split fractions must be positive and sum to at most 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


def _split_codes(n, cfg, gen):
    n_train = max(1, round(cfg.train_fraction * n))
    n_val = min(n - n_train, round(cfg.val_fraction * n))
    codes = np.full(n, TEST, dtype=np.int8)
    order = gen.permutation(n)
    codes[order[:n_train]] = TRAIN
    codes[order[n_train:n_train + n_val]] = VAL
    return codes


def _relation_edges(clean, cfg, gen):
    """Edges into every target node from ``edges_per_node`` others, biased toward its class.

    Auxiliary node types are represented through the target-to-target links
    they induce; only target nodes carry features.
    """
    n, m = clean.size, cfg.edges_per_node
    members = [np.flatnonzero(clean == c) for c in range(cfg.C)]
    dst = np.repeat(np.arange(n), m)
    same = gen.random(n * m) < cfg.homophily
    src = gen.integers(0, n, size=n * m)
    for c, pool in enumerate(members):
        pick = same & (clean[dst] == c)
        src[pick] = pool[gen.integers(0, pool.size, size=int(pick.sum()))]
    keep = src != dst
    edges = np.unique(np.stack([src[keep], dst[keep]], axis=1), axis=0)
    return edges


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    gen = RngState(cfg.seed, (STREAM_DATA,)).generator
    n = cfg.n_target
    clean = np.arange(n) % cfg.C
    gen.shuffle(clean)
    centers = gen.normal(size=(cfg.C, cfg.d))
    centers *= cfg.cluster_separation / np.linalg.norm(centers, axis=1, keepdims=True)
    features = centers[clean] + gen.normal(size=(n, cfg.d))
    split = _split_codes(n, cfg, gen)
    relations = {f"rel{r}": _relation_edges(clean, cfg, gen) for r in range(cfg.aux_types)}

    labels = clean.copy()
    train = np.flatnonzero(split == TRAIN)
    n_noisy = round(cfg.noise_fraction * train.size)
    noisy = np.zeros(n, dtype=bool)
    corrupt = np.sort(gen.choice(train, size=n_noisy, replace=False))
    noisy[corrupt] = True
    labels[corrupt] = (labels[corrupt] + gen.integers(1, cfg.C, size=n_noisy)) % cfg.C
    return Dataset(features, labels, split, relations, noisy, num_classes=cfg.C)


def aggregate_features(dataset: Dataset, features=None) -> np.ndarray:
    """Raw features followed by one neighbor-mean block per relation (sorted by name).

    Nodes without neighbors under a relation get a zero block.
    """
    X = dataset.features if features is None else np.asarray(features, dtype=np.float64)
    blocks = [X]
    for name in sorted(dataset.relations):
        edges = dataset.relations[name]
        total = np.zeros_like(X)
        np.add.at(total, edges[:, 1], X[edges[:, 0]])
        count = np.bincount(edges[:, 1], minlength=X.shape[0]).astype(np.float64)
        blocks.append(np.divide(total, count[:, None], out=np.zeros_like(X), where=count[:, None] > 0))
    return np.concatenate(blocks, axis=1)


# --- file I/O -------------------------------------------------------------


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def save_dataset(dataset: Dataset, directory) -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    d = dataset.features.shape[1]
    with open(out / "features.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(f"f{j}" for j in range(d)) + "\n")
        for row in dataset.features.tolist():
            fh.write(",".join(map(repr, row)) + "\n")
    _write_rows(out / "labels.csv", ["node", "label"], enumerate(dataset.labels.tolist()))
    _write_rows(out / "split.csv", ["node", "split"],
                ((i, SPLIT_NAMES[s]) for i, s in enumerate(dataset.split.tolist())))
    for stale in out.glob("edges_*.csv"):
        if stale.stem[len("edges_"):] not in dataset.relations:
            stale.unlink()
    for name, edges in dataset.relations.items():
        _write_rows(out / f"edges_{name}.csv", ["src", "dst"], edges.tolist())
    flags = out / "flags.csv"
    if dataset.noisy_flags is not None:
        _write_rows(flags, ["node", "noisy"], enumerate(dataset.noisy_flags.astype(int).tolist()))
    elif flags.exists():
        flags.unlink()


def _read_table(path, header):
    if not path.is_file():
        raise DatasetError(f"missing file {path.name}", path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise DatasetError(f"cannot read {path.name}: {exc}", path) from exc
    if not rows:
        raise DatasetError(f"{path.name} is empty", path)
    if header is not None and rows[0] != header:
        raise DatasetError(f"{path.name} header should be {','.join(header)}", path)
    return rows[0], rows[1:]


def _node_column(path, body, n, convert):
    values = [None] * n
    try:
        for row in body:
            node, value = int(row[0]), convert(row[1])
            if not 0 <= node < n or values[node] is not None:
                raise DatasetError(f"{path.name}: bad or repeated node index {node}", path)
            values[node] = value
    except (ValueError, IndexError, KeyError) as exc:
        raise DatasetError(f"{path.name}: malformed row ({exc})", path) from exc
    if len(body) != n:
        raise DatasetError(f"{path.name} has {len(body)} rows but features.csv has {n}", path)
    return values


def load_dataset(directory) -> Dataset:
    root = Path(directory)
    if not root.is_dir():
        raise DatasetError(f"dataset directory {root} does not exist", root)
    path = root / "features.csv"
    header, body = _read_table(path, None)
    try:
        features = np.array([[float(v) for v in row] for row in body], dtype=np.float64)
    except ValueError as exc:
        raise DatasetError(f"features.csv: {exc}", path) from exc
    if any(len(row) != len(header) for row in body):
        raise DatasetError("features.csv rows differ in length from its header", path)
    features = features.reshape(len(body), len(header))
    n = features.shape[0]

    path = root / "labels.csv"
    labels = _node_column(path, _read_table(path, ["node", "label"])[1], n, int)
    path = root / "split.csv"
    split = _node_column(path, _read_table(path, ["node", "split"])[1], n, SPLIT_NAMES.index)

    relations = {}
    for path in sorted(root.glob("edges_*.csv")):
        _, body = _read_table(path, ["src", "dst"])
        try:
            edges = np.array([[int(a), int(b)] for a, b in body], dtype=np.int64).reshape(-1, 2)
        except ValueError as exc:
            raise DatasetError(f"{path.name}: malformed edge ({exc})", path) from exc
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise DatasetError(f"{path.name} references a node outside [0, {n})", path)
        relations[path.stem[len("edges_"):]] = edges

    flags = None
    path = root / "flags.csv"
    if path.exists():
        flags = _node_column(path, _read_table(path, ["node", "noisy"])[1], n,
                             lambda v: {"0": False, "1": True}[v])
    return Dataset(features, labels, split, relations, flags)
