"""Synthetic data generation, CSV ingestion, partitioning, and splitting.

Heterogeneity across clients comes from one of two schemes: per-class
Dirichlet allocation (smaller beta = more skew) or the pathological setting
where each client holds a small fixed number of classes in disjoint shards.
Every function is a pure function of (inputs, seed); there are no retry
loops, a partition that cannot satisfy its guarantees raises instead.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import CsvParseError, CsvSchemaError, PartitionError, SplitError

DIRICHLET = "dirichlet"
PATHOLOGICAL = "pathological"


@dataclass
class Dataset:
    features: np.ndarray  # [n, input_dim] float64
    labels: np.ndarray  # [n] int64 class ids
    num_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self) < 1:
            raise ValueError("dataset must contain at least one sample")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError("labels out of range for num_classes")

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.num_classes)


@dataclass(frozen=True)
class PartitionConfig:
    scheme: str
    num_clients: int
    seed: int
    dirichlet_beta: float = 0.0
    classes_per_client: int = 0

    def __post_init__(self):
        if self.scheme not in (DIRICHLET, PATHOLOGICAL):
            raise ValueError(f"unknown partition scheme {self.scheme!r}")
        if self.num_clients < 1:
            raise ValueError("num_clients must be positive")
        if self.scheme == DIRICHLET and not self.dirichlet_beta > 0:
            raise ValueError("dirichlet_beta must be > 0")
        if self.scheme == PATHOLOGICAL and self.classes_per_client < 1:
            raise ValueError("classes_per_client must be positive")


@dataclass
class ClientSplit:
    train: Dataset
    test: Dataset


def gen_synthetic(
    num_classes: int,
    input_dim: int,
    samples_per_class: int,
    class_sep: float,
    seed: int,
) -> Dataset:
    """Gaussian blob per class: mean on a sphere of radius class_sep, unit covariance."""
    if num_classes < 1 or input_dim < 1 or samples_per_class < 1:
        raise ValueError("counts must be positive")
    if not class_sep > 0:
        raise ValueError("class_sep must be > 0")
    rng = np.random.default_rng(seed)
    feats = []
    labels = []
    for c in range(num_classes):
        direction = rng.normal(size=input_dim)
        direction /= np.linalg.norm(direction)
        mean = class_sep * direction
        feats.append(mean + rng.normal(size=(samples_per_class, input_dim)))
        labels.append(np.full(samples_per_class, c, dtype=np.int64))
    return Dataset(np.vstack(feats), np.concatenate(labels), num_classes)


def _dirichlet_indices(data: Dataset, cfg: PartitionConfig, rng: np.random.Generator) -> list[list[int]]:
    per_client: list[list[int]] = [[] for _ in range(cfg.num_clients)]
    for c in range(data.num_classes):
        idx = np.flatnonzero(data.labels == c)
        if idx.size == 0:
            continue
        rng.shuffle(idx)
        props = rng.dirichlet(np.full(cfg.num_clients, cfg.dirichlet_beta))
        # cumulative rounding: exact disjoint cover of this class's samples
        bounds = np.floor(np.cumsum(props) * idx.size).astype(int)
        bounds[-1] = idx.size
        start = 0
        for i, stop in enumerate(bounds):
            per_client[i].extend(idx[start:stop].tolist())
            start = stop
    return per_client


def _pathological_indices(data: Dataset, cfg: PartitionConfig, rng: np.random.Generator) -> list[list[int]]:
    n_classes = data.num_classes
    cpc = cfg.classes_per_client
    if cpc > n_classes:
        raise PartitionError(f"classes_per_client={cpc} exceeds num_classes={n_classes}")
    total_slots = cfg.num_clients * cpc
    if total_slots < n_classes:
        raise PartitionError(
            f"{cfg.num_clients} clients x {cpc} classes cannot cover all {n_classes} classes"
        )
    # Deal classes round-robin from repeated shuffled permutations, then repair
    # the rare duplicate inside one client's hand at a permutation boundary.
    slots: list[int] = []
    while len(slots) < total_slots:
        slots.extend(rng.permutation(n_classes).tolist())
    client_classes: list[list[int]] = []
    for i in range(cfg.num_clients):
        hand = slots[i * cpc : (i + 1) * cpc]
        if len(set(hand)) < cpc:
            pool = [c for c in range(n_classes) if c not in hand]
            fixed, seen = [], set()
            for c in hand:
                if c in seen:
                    c = pool.pop(0)
                seen.add(c)
                fixed.append(c)
            hand = fixed
        client_classes.append(hand)

    holders: dict[int, list[int]] = {c: [] for c in range(n_classes)}
    for i, hand in enumerate(client_classes):
        for c in hand:
            holders[c].append(i)

    per_client: list[list[int]] = [[] for _ in range(cfg.num_clients)]
    for c in range(n_classes):
        idx = np.flatnonzero(data.labels == c)
        clients = holders[c]
        if not clients:
            raise PartitionError(f"class {c} assigned to no client")
        if idx.size < len(clients):
            raise PartitionError(f"class {c} has {idx.size} samples for {len(clients)} shards")
        rng.shuffle(idx)
        shards = np.array_split(idx, len(clients))
        for i, shard in zip(clients, shards):
            per_client[i].extend(shard.tolist())
    return per_client


def partition(data: Dataset, cfg: PartitionConfig) -> list[Dataset]:
    """Disjoint exact cover of the dataset across num_clients client datasets."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.scheme == DIRICHLET:
        per_client = _dirichlet_indices(data, cfg, rng)
    else:
        per_client = _pathological_indices(data, cfg, rng)

    covered = sorted(i for part in per_client for i in part)
    if covered != list(range(len(data))):
        raise PartitionError("partition is not a disjoint exact cover (internal error)")
    for i, part in enumerate(per_client):
        if len(part) < 2:
            raise PartitionError(
                f"client {i} received {len(part)} samples (< 2); "
                "raise samples_per_class or dirichlet_beta"
            )
    return [data.subset(np.sort(np.asarray(part, dtype=np.int64))) for part in per_client]


def split_client(data: Dataset, test_fraction: float = 0.25, seed: int = 0) -> ClientSplit:
    """Stratified train/test split, test_fraction of the data held out."""
    n = len(data)
    if n < 2:
        raise SplitError(f"cannot split {n} samples into train and test")
    if not 0 < test_fraction < 1:
        raise SplitError(f"test_fraction {test_fraction} must be in (0, 1)")
    rng = np.random.default_rng(seed)
    n_test_target = max(1, round(n * test_fraction))

    # stratified where possible; a single-sample class stays in train
    test_parts: list[np.ndarray] = []
    train_parts: list[np.ndarray] = []
    for c in np.unique(data.labels):
        idx = np.flatnonzero(data.labels == c)
        rng.shuffle(idx)
        k = round(idx.size * test_fraction) if idx.size > 1 else 0
        k = min(k, idx.size - 1)
        test_parts.append(idx[:k])
        train_parts.append(idx[k:])
    test_idx = np.concatenate(test_parts) if test_parts else np.empty(0, dtype=np.int64)
    train_idx = np.concatenate(train_parts)

    # nudge to the target size, never emptying either side
    test_idx = np.sort(test_idx)
    train_idx = np.sort(train_idx)
    while test_idx.size > n_test_target and test_idx.size > 1:
        move, test_idx = test_idx[-1], test_idx[:-1]
        train_idx = np.sort(np.append(train_idx, move))
    while test_idx.size < n_test_target and train_idx.size > 1:
        move, train_idx = train_idx[-1], train_idx[:-1]
        test_idx = np.sort(np.append(test_idx, move))
    if test_idx.size == 0 or train_idx.size == 0:
        raise SplitError("split produced an empty side")
    return ClientSplit(train=data.subset(train_idx), test=data.subset(test_idx))


def sample_fraction(data: Dataset, s_percent: float, seed_t: int) -> Dataset:
    """Uniform sample without replacement of ceil(s% * n) items; fresh per seed."""
    if not 0 < s_percent <= 100:
        raise ValueError(f"s_percent {s_percent} must be in (0, 100]")
    rng = np.random.default_rng(seed_t)
    n = len(data)
    k = math.ceil(s_percent / 100.0 * n)
    idx = rng.choice(n, size=k, replace=False)
    return data.subset(idx)


def load_csv(path: str) -> Dataset:
    """Read a `f0,...,fk,label` CSV into a Dataset."""
    rows: list[list[str]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            rows.append(row)
    if not rows:
        raise CsvSchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    n_feat = len(header) - 1
    expected = [f"f{i}" for i in range(n_feat)] + ["label"]
    if n_feat < 1 or header != expected:
        raise CsvSchemaError(f"{path}: header must be f0,...,f{max(n_feat - 1, 0)},label, got {header}")
    if len(rows) < 2:
        raise CsvSchemaError(f"{path}: no data rows")

    feats = np.empty((len(rows) - 1, n_feat))
    labels = np.empty(len(rows) - 1, dtype=np.int64)
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != n_feat + 1:
            raise CsvParseError(f"{path}:{lineno}: expected {n_feat + 1} columns, got {len(row)}")
        try:
            feats[lineno - 2] = [float(v) for v in row[:-1]]
        except ValueError as exc:
            raise CsvParseError(f"{path}:{lineno}: bad feature value ({exc})") from exc
        try:
            labels[lineno - 2] = int(row[-1])
        except ValueError as exc:
            raise CsvParseError(f"{path}:{lineno}: bad label ({exc})") from exc

    present = set(labels.tolist())
    num_classes = max(present) + 1 if present else 0
    if labels.min() < 0 or present != set(range(num_classes)):
        raise CsvSchemaError(f"{path}: labels must be contiguous ints starting at 0, got {sorted(present)}")
    return Dataset(feats, labels, num_classes)
