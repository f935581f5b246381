"""Experiment configuration: strict YAML parsing and data materialization.

The config file is a nested mapping (documented in the README). Parsing is
strict — unknown keys are errors naming the offending key, so typos never
fall back to silent defaults. All hyperparameter defaults are the simulator's
standard settings (eta=1.0, s=80, p=1, batch 10, 1 local epoch).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import yaml

from .ala import AlaConfig
from .data import (
    DIRICHLET,
    PATHOLOGICAL,
    ClientSplit,
    PartitionConfig,
    gen_synthetic,
    load_csv,
    partition,
    split_client,
)
from .errors import ConfigError
from .models import LINEAR_SOFTMAX, MLP_1_HIDDEN, ModelArch
from .rng import PURPOSE_DATA, PURPOSE_PARTITION, PURPOSE_SPLIT, derive_seed
from .runtime import FEDALA, FEDAVG_C, FEDPROX, FlConfig, StrategyConfig

SOURCE_SYNTHETIC = "synthetic"
SOURCE_CSV = "csv"


@dataclass(frozen=True)
class DataConfig:
    source: str
    csv_path: str | None
    num_classes: int
    input_dim: int
    samples_per_class: int
    class_sep: float
    test_fraction: float
    scheme: str
    dirichlet_beta: float
    classes_per_client: int


@dataclass(frozen=True)
class ExperimentConfig:
    run_name: str
    output_dir: str | None
    repeats: int
    seed: int
    data: DataConfig
    model: ModelArch
    fl: FlConfig


class _Section:
    """One mapping level of the config; tracks consumed keys."""

    def __init__(self, raw: Any, path: str):
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"section '{path}' must be a mapping")
        self.raw = dict(raw)
        self.path = path

    def _label(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.raw

    def take(self, key: str, default=None, required: bool = False):
        if key not in self.raw:
            if required:
                raise ConfigError(f"missing required key '{self._label(key)}'")
            return default
        return self.raw.pop(key)

    def take_str(self, key: str, default: str | None = None, required: bool = False) -> str | None:
        v = self.take(key, default, required)
        if v is None:
            return None
        if not isinstance(v, str):
            raise ConfigError(f"'{self._label(key)}' must be a string, got {v!r}")
        return v

    def take_int(self, key: str, default: int | None = None, required: bool = False) -> int | None:
        v = self.take(key, default, required)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"'{self._label(key)}' must be an integer, got {v!r}")
        return v

    def take_float(self, key: str, default: float | None = None, required: bool = False) -> float | None:
        v = self.take(key, default, required)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"'{self._label(key)}' must be a number, got {v!r}")
        return float(v)

    def take_bool(self, key: str, default: bool = False) -> bool:
        v = self.take(key, default)
        if not isinstance(v, bool):
            raise ConfigError(f"'{self._label(key)}' must be true/false, got {v!r}")
        return v

    def section(self, key: str, required: bool = False) -> "_Section":
        return _Section(self.take(key, {}, required), self._label(key))

    def finish(self) -> None:
        if self.raw:
            keys = ", ".join(repr(self._label(k)) for k in sorted(self.raw))
            raise ConfigError(f"unknown key(s) {keys}")


def _parse_data(sec: _Section) -> DataConfig:
    source = sec.take_str("source", SOURCE_SYNTHETIC)
    if source not in (SOURCE_SYNTHETIC, SOURCE_CSV):
        raise ConfigError(f"'data.source' must be '{SOURCE_SYNTHETIC}' or '{SOURCE_CSV}', got {source!r}")

    csv_path = sec.take_str("csv_path")
    num_classes = sec.take_int("num_classes", 10)
    input_dim = sec.take_int("input_dim", 32)
    samples_per_class = sec.take_int("samples_per_class", 200)
    class_sep = sec.take_float("class_sep", 2.5)
    test_fraction = sec.take_float("test_fraction", 0.25)

    part = sec.section("partition")
    scheme = part.take_str("scheme", DIRICHLET)
    if scheme not in (DIRICHLET, PATHOLOGICAL):
        raise ConfigError(f"'data.partition.scheme' must be '{DIRICHLET}' or '{PATHOLOGICAL}', got {scheme!r}")
    dirichlet_beta = part.take_float("dirichlet_beta", 0.1)
    classes_per_client = part.take_int("classes_per_client", 2)
    part.finish()
    sec.finish()

    if source == SOURCE_CSV:
        if not csv_path:
            raise ConfigError("'data.csv_path' is required when data.source is 'csv'")
    elif csv_path:
        raise ConfigError("'data.csv_path' is only valid when data.source is 'csv'")
    if source == SOURCE_SYNTHETIC:
        if num_classes < 2:
            raise ConfigError("'data.num_classes' must be >= 2")
        if input_dim < 1:
            raise ConfigError("'data.input_dim' must be >= 1")
        if samples_per_class < 1:
            raise ConfigError("'data.samples_per_class' must be >= 1")
        if class_sep <= 0:
            raise ConfigError("'data.class_sep' must be > 0")
    if not 0 < test_fraction < 1:
        raise ConfigError("'data.test_fraction' must be in (0, 1)")
    if scheme == DIRICHLET and dirichlet_beta <= 0:
        raise ConfigError("'data.partition.dirichlet_beta' must be > 0")
    if scheme == PATHOLOGICAL and classes_per_client < 1:
        raise ConfigError("'data.partition.classes_per_client' must be >= 1")

    return DataConfig(source, csv_path, num_classes, input_dim, samples_per_class,
                      class_sep, test_fraction, scheme, dirichlet_beta, classes_per_client)


def _parse_model(sec: _Section, data: DataConfig) -> ModelArch:
    kind = sec.take_str("kind", MLP_1_HIDDEN)
    if kind not in (LINEAR_SOFTMAX, MLP_1_HIDDEN):
        raise ConfigError(f"'model.kind' must be '{LINEAR_SOFTMAX}' or '{MLP_1_HIDDEN}', got {kind!r}")
    hidden_dim = sec.take_int("hidden_dim", 16 if kind == MLP_1_HIDDEN else 0)
    input_dim = sec.take_int("input_dim")
    num_classes = sec.take_int("num_classes")
    sec.finish()

    if kind == LINEAR_SOFTMAX and hidden_dim:
        raise ConfigError("'model.hidden_dim' is only valid for mlp-1-hidden")
    if kind == MLP_1_HIDDEN and hidden_dim < 1:
        raise ConfigError("'model.hidden_dim' must be >= 1 for mlp-1-hidden")

    if data.source == SOURCE_CSV:
        if input_dim is None or num_classes is None:
            raise ConfigError("'model.input_dim' and 'model.num_classes' are required with data.source 'csv'")
    else:
        if input_dim is not None and input_dim != data.input_dim:
            raise ConfigError(f"'model.input_dim' ({input_dim}) conflicts with data.input_dim ({data.input_dim})")
        if num_classes is not None and num_classes != data.num_classes:
            raise ConfigError(f"'model.num_classes' ({num_classes}) conflicts with data.num_classes ({data.num_classes})")
        input_dim = data.input_dim
        num_classes = data.num_classes

    try:
        return ModelArch(kind, input_dim, num_classes, hidden_dim)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc


def _parse_strategy(sec: _Section) -> StrategyConfig:
    kind = sec.take_str("kind", "fedavg")
    prox_mu_given = sec.has("prox_mu")
    prox_mu = sec.take_float("prox_mu", 0.001)
    finetune_given = sec.has("finetune_epochs")
    finetune_epochs = sec.take_int("finetune_epochs", 1)
    attach_ala = sec.take_bool("attach_ala", False)
    sec.finish()

    if prox_mu_given and kind != FEDPROX:
        raise ConfigError("'fl.strategy.prox_mu' is only valid for kind 'fedprox'")
    if finetune_given and kind != FEDAVG_C:
        raise ConfigError("'fl.strategy.finetune_epochs' is only valid for kind 'fedavg_c'")
    try:
        return StrategyConfig(kind, prox_mu, finetune_epochs, attach_ala)
    except ConfigError as exc:
        raise ConfigError(f"fl.strategy: {exc}") from exc


def _parse_ala(sec: _Section) -> AlaConfig:
    kwargs = dict(
        p=sec.take_int("p", 1),
        s_percent=sec.take_float("s_percent", 80.0),
        eta=sec.take_float("eta", 1.0),
        init_stage_round=sec.take_int("init_stage_round", 2),
        init_max_epochs=sec.take_int("init_max_epochs", 40),
        init_converge_window=sec.take_int("init_converge_window", 3),
        init_converge_tol=sec.take_float("init_converge_tol", 1e-4),
        batch_size=sec.take_int("batch_size", 10),
    )
    sec.finish()
    try:
        return AlaConfig(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"fl.ala: {exc}") from exc


def _parse_fl(sec: _Section, seed: int, arch: ModelArch) -> FlConfig:
    num_clients = sec.take_int("num_clients", required=True)
    rounds = sec.take_int("rounds", required=True)
    join_ratio = sec.take_float("join_ratio", 1.0)
    local_lr = sec.take_float("local_lr", 0.1)
    local_epochs = sec.take_int("local_epochs", 1)
    batch_size = sec.take_int("batch_size", 10)

    strategy = _parse_strategy(sec.section("strategy"))
    ala_given = sec.has("ala")
    ala = _parse_ala(sec.section("ala")) if ala_given else None
    sec.finish()

    if ala_given and not strategy.uses_ala():
        raise ConfigError("'fl.ala' section given but the strategy does not use adaptive aggregation "
                          "(set fl.strategy.kind to 'fedala' or attach_ala to true)")
    if strategy.uses_ala() and ala is None:
        ala = AlaConfig()
    if ala is not None and ala.p > arch.num_logical_layers():
        raise ConfigError(f"'fl.ala.p' ({ala.p}) exceeds the model's layer count ({arch.num_logical_layers()})")

    try:
        return FlConfig(num_clients, rounds, join_ratio, local_lr, local_epochs,
                        batch_size, strategy, ala, seed)
    except ConfigError as exc:
        raise ConfigError(f"fl: {exc}") from exc


def parse_config(path: str | Path) -> ExperimentConfig:
    """Load and fully validate an experiment config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    root = _Section(raw, "")
    run_name = root.take_str("run_name", required=True)
    output_dir = root.take_str("output_dir")
    repeats = root.take_int("repeats", 1)
    seed = root.take_int("seed", 0)
    data = _parse_data(root.section("data"))
    model = _parse_model(root.section("model"), data)
    fl = _parse_fl(root.section("fl", required=True), seed, model)
    root.finish()

    if not run_name:
        raise ConfigError("'run_name' must be non-empty")
    if repeats < 1:
        raise ConfigError("'repeats' must be >= 1")
    if seed < 0:
        raise ConfigError("'seed' must be >= 0")

    return ExperimentConfig(run_name, output_dir, repeats, seed, data, model, fl)


def config_echo(cfg: ExperimentConfig) -> dict:
    """JSON-ready view of the fully-defaulted config, for the run report."""
    fl = cfg.fl
    echo: dict[str, Any] = {
        "run_name": cfg.run_name,
        "output_dir": cfg.output_dir,
        "repeats": cfg.repeats,
        "seed": cfg.seed,
        "data": {
            "source": cfg.data.source,
            "csv_path": cfg.data.csv_path,
            "num_classes": cfg.data.num_classes,
            "input_dim": cfg.data.input_dim,
            "samples_per_class": cfg.data.samples_per_class,
            "class_sep": cfg.data.class_sep,
            "test_fraction": cfg.data.test_fraction,
            "partition": {
                "scheme": cfg.data.scheme,
                "dirichlet_beta": cfg.data.dirichlet_beta,
                "classes_per_client": cfg.data.classes_per_client,
            },
        },
        "model": {
            "kind": cfg.model.kind,
            "input_dim": cfg.model.input_dim,
            "num_classes": cfg.model.num_classes,
            "hidden_dim": cfg.model.hidden_dim,
        },
        "fl": {
            "num_clients": fl.num_clients,
            "rounds": fl.rounds,
            "join_ratio": fl.join_ratio,
            "local_lr": fl.local_lr,
            "local_epochs": fl.local_epochs,
            "batch_size": fl.batch_size,
            "strategy": {
                "kind": fl.strategy.kind,
                "prox_mu": fl.strategy.prox_mu,
                "finetune_epochs": fl.strategy.finetune_epochs,
                "attach_ala": fl.strategy.attach_ala,
            },
            "ala": None if fl.ala is None else {
                "p": fl.ala.p,
                "s_percent": fl.ala.s_percent,
                "eta": fl.ala.eta,
                "init_stage_round": fl.ala.init_stage_round,
                "init_max_epochs": fl.ala.init_max_epochs,
                "init_converge_window": fl.ala.init_converge_window,
                "init_converge_tol": fl.ala.init_converge_tol,
                "batch_size": fl.ala.batch_size,
            },
        },
    }
    return echo


def fl_for_repeat(cfg: ExperimentConfig, repeat: int) -> FlConfig:
    """Per-repeat seeds are seed + repeat so each repeat reproduces on its own."""
    return replace(cfg.fl, seed=cfg.seed + repeat)


def materialize_data(cfg: ExperimentConfig, repeat: int) -> tuple[list[ClientSplit], ModelArch]:
    """Build, partition, and split the dataset for one repeat."""
    base = cfg.seed + repeat
    if cfg.data.source == SOURCE_CSV:
        data = load_csv(cfg.data.csv_path)
        if data.features.shape[1] != cfg.model.input_dim:
            raise ConfigError(
                f"'model.input_dim' ({cfg.model.input_dim}) does not match csv feature count "
                f"({data.features.shape[1]})")
        if data.num_classes != cfg.model.num_classes:
            raise ConfigError(
                f"'model.num_classes' ({cfg.model.num_classes}) does not match csv classes "
                f"({data.num_classes})")
    else:
        data = gen_synthetic(cfg.data.num_classes, cfg.data.input_dim, cfg.data.samples_per_class,
                             cfg.data.class_sep, derive_seed(base, PURPOSE_DATA))

    pcfg = PartitionConfig(
        scheme=cfg.data.scheme,
        num_clients=cfg.fl.num_clients,
        seed=derive_seed(base, PURPOSE_PARTITION),
        dirichlet_beta=cfg.data.dirichlet_beta if cfg.data.scheme == DIRICHLET else 0.0,
        classes_per_client=cfg.data.classes_per_client if cfg.data.scheme == PATHOLOGICAL else 0,
    )
    parts = partition(data, pcfg)
    splits = [
        split_client(part, cfg.data.test_fraction, derive_seed(base, PURPOSE_SPLIT, cid))
        for cid, part in enumerate(parts)
    ]
    return splits, cfg.model
