"""Deterministic single-process simulator for personalized federated learning
with adaptive local aggregation."""

__version__ = "0.1.0"

# git-describe-style tag embedded in run reports
VERSION = "v" + __version__

from .ala import AlaConfig, AlaState, ala_init_state, ala_local_init, ala_weight_drift
from .data import Dataset, ClientSplit, PartitionConfig, gen_synthetic, load_csv, partition, split_client
from .errors import (
    ConfigError,
    CsvParseError,
    CsvSchemaError,
    NumericError,
    PartitionError,
    ShapeMismatchError,
    SimError,
    SplitError,
    StaleCacheError,
)
from .metrics import AlaTraceRecord, MetricsRecord, read_metrics_csv, write_metrics_csv
from .models import Batch, ModelArch, backward, evaluate, forward_loss, infer_arch, init_params
from .runtime import (
    ClientState,
    ExperimentReport,
    FlConfig,
    RoundResult,
    StrategyConfig,
    aggregate_models,
    local_init,
    local_train,
    run_experiment,
    run_round,
)
from .tensors import AggregationWeights, LayerTensor, ModelParams, interpolate

__all__ = [
    "AggregationWeights",
    "AlaConfig",
    "AlaState",
    "AlaTraceRecord",
    "Batch",
    "ClientSplit",
    "ClientState",
    "ConfigError",
    "CsvParseError",
    "CsvSchemaError",
    "Dataset",
    "ExperimentReport",
    "FlConfig",
    "LayerTensor",
    "MetricsRecord",
    "ModelArch",
    "ModelParams",
    "NumericError",
    "PartitionConfig",
    "PartitionError",
    "RoundResult",
    "ShapeMismatchError",
    "SimError",
    "SplitError",
    "StaleCacheError",
    "StrategyConfig",
    "VERSION",
    "aggregate_models",
    "ala_init_state",
    "ala_local_init",
    "ala_weight_drift",
    "backward",
    "evaluate",
    "forward_loss",
    "gen_synthetic",
    "infer_arch",
    "init_params",
    "interpolate",
    "load_csv",
    "local_init",
    "local_train",
    "partition",
    "read_metrics_csv",
    "run_experiment",
    "run_round",
    "split_client",
    "write_metrics_csv",
]
