"""Single-process federated learning loop.

One server, N stateful clients. Per round the server samples a subset of
clients, each initializes its local model from the downloaded global model
(plain overwrite, finetuned overwrite, or adaptive aggregation), trains
locally, and uploads; the server aggregates uploads weighted by local
training-set size and evaluates on the union test set.

Every random draw is keyed by (seed, purpose, round, client) so subsystems
never perturb each other's streams; with FEDALA_SIM_THREADS > 1 client work
runs on a thread pool and results are folded in ascending client-id order,
keeping the metrics stream byte-identical to the sequential run.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ala import AlaConfig, AlaState, ala_init_state, ala_local_init
from .data import ClientSplit, Dataset
from .errors import ConfigError, NumericError, ShapeMismatchError
from .metrics import (
    PHASE_INIT,
    PHASE_SERVER,
    PHASE_TRAINED,
    SERVER_CLIENT_ID,
    AlaTraceRecord,
    MetricsRecord,
)
from .models import Batch, ModelArch, backward, evaluate, forward_loss, init_params, sgd_step
from .rng import (
    PURPOSE_ALA,
    PURPOSE_CLIENT_SAMPLING,
    PURPOSE_FINETUNE,
    PURPOSE_MODEL_INIT,
    PURPOSE_TRAIN_SHUFFLE,
    derive_seed,
    spawn_rng,
)
from .tensors import LayerTensor, ModelParams, saxpy_inplace

FEDAVG = "fedavg"
FEDPROX = "fedprox"
FEDAVG_C = "fedavg_c"
FEDALA = "fedala"

STRATEGY_KINDS = (FEDAVG, FEDPROX, FEDAVG_C, FEDALA)

THREADS_ENV = "FEDALA_SIM_THREADS"


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = FEDAVG
    prox_mu: float = 0.001
    finetune_epochs: int = 1
    attach_ala: bool = False

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ConfigError(f"unknown strategy kind {self.kind!r}, expected one of {STRATEGY_KINDS}")
        if self.kind == FEDALA and self.attach_ala:
            raise ConfigError("attach_ala is redundant with kind 'fedala'")
        if self.prox_mu < 0:
            raise ConfigError("strategy.prox_mu must be >= 0")
        if self.finetune_epochs < 0:
            raise ConfigError("strategy.finetune_epochs must be >= 0")

    def uses_ala(self) -> bool:
        return self.kind == FEDALA or self.attach_ala


@dataclass(frozen=True)
class FlConfig:
    num_clients: int
    rounds: int
    join_ratio: float = 1.0
    local_lr: float = 0.1
    local_epochs: int = 1
    batch_size: int = 10
    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    ala: AlaConfig | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_clients < 1:
            raise ConfigError("num_clients must be >= 1")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if not 0 < self.join_ratio <= 1:
            raise ConfigError("join_ratio must be in (0, 1]")
        # Zero is allowed for degenerate no-op training runs.
        if self.local_lr < 0:
            raise ConfigError("local_lr must be >= 0")
        if self.local_epochs < 1:
            raise ConfigError("local_epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if self.strategy.uses_ala() and self.ala is None:
            raise ConfigError(f"strategy {self.strategy.kind!r} with ALA requires an ala section")

    def num_participants(self) -> int:
        return math.ceil(self.join_ratio * self.num_clients)


@dataclass
class ClientState:
    id: int
    split: ClientSplit
    local_model: ModelParams
    k_weight: float
    ala_state: AlaState | None = None
    best_test_acc: float = 0.0


@dataclass
class RoundResult:
    round: int
    participants: list[int]
    uploaded: list[tuple[int, ModelParams]]
    per_client_metrics: list[MetricsRecord]
    ala_trace: list[AlaTraceRecord]
    comm_params: int


@dataclass
class ExperimentReport:
    run_name: str
    repeat: int
    rounds: int
    num_clients: int
    num_params: int
    pfl_accuracy: float
    traditional_accuracy: float
    final_server_loss: float
    final_server_acc: float
    server_loss_series: list[float]
    server_acc_series: list[float]
    g_init_series: list[float]
    g_trained_series: list[float]
    total_comm_params: int
    records: list[MetricsRecord]
    ala_trace: list[AlaTraceRecord]


def _epoch_batches(data: Dataset, order: np.ndarray, batch_size: int):
    for start in range(0, order.size, batch_size):
        idx = order[start : start + batch_size]
        yield Batch(data.features[idx], data.labels[idx])


def _sgd_train(
    params: ModelParams,
    data: Dataset,
    epochs: int,
    batch_size: int,
    lr: float,
    rng: np.random.Generator,
    prox_mu: float = 0.0,
    prox_ref: ModelParams | None = None,
) -> ModelParams:
    for _ in range(epochs):
        order = rng.permutation(len(data))
        for batch in _epoch_batches(data, order, batch_size):
            _, cache = forward_loss(params, batch)
            grad = backward(params, cache)
            if prox_mu > 0.0 and prox_ref is not None:
                for g, th, ref in zip(grad.layers, params.layers, prox_ref.layers):
                    g.data += prox_mu * (th.data - ref.data)
            sgd_step(params, grad, lr)
    return params


def local_init(client: ClientState, global_: ModelParams, cfg: FlConfig, round_t: int) -> ModelParams:
    """This round's starting model: overwrite, adaptive blend, and/or finetune."""
    strategy = cfg.strategy
    if strategy.uses_ala():
        assert client.ala_state is not None and cfg.ala is not None
        initialized = ala_local_init(
            client.ala_state,
            client.local_model,
            global_,
            client.split.train,
            round_t,
            cfg.ala,
            derive_seed(cfg.seed, PURPOSE_ALA, client.id),
        )
    else:
        initialized = global_.copy()
    if strategy.kind == FEDAVG_C and strategy.finetune_epochs > 0:
        rng = spawn_rng(cfg.seed, PURPOSE_FINETUNE, round_t, client.id)
        _sgd_train(initialized, client.split.train, strategy.finetune_epochs, cfg.batch_size, cfg.local_lr, rng)
    return initialized


def local_train(
    model: ModelParams,
    split: ClientSplit,
    cfg: FlConfig,
    global_ref: ModelParams | None = None,
    round_t: int = 1,
    client_id: int = 0,
) -> ModelParams:
    """Local SGD passes in place on ``model``; fedprox pulls toward global_ref."""
    rng = spawn_rng(cfg.seed, PURPOSE_TRAIN_SHUFFLE, round_t, client_id)
    prox_mu = cfg.strategy.prox_mu if cfg.strategy.kind == FEDPROX else 0.0
    return _sgd_train(model, split.train, cfg.local_epochs, cfg.batch_size, cfg.local_lr,
                      rng, prox_mu=prox_mu, prox_ref=global_ref)


def _client_round(
    client: ClientState,
    global_: ModelParams,
    round_t: int,
    cfg: FlConfig,
    run_name: str,
    repeat: int,
    num_params: int,
):
    try:
        initialized = local_init(client, global_, cfg, round_t)

        train, test = client.split.train, client.split.test
        init_train_loss, _ = evaluate(initialized, train.features, train.labels)
        _, init_test_acc = evaluate(initialized, test.features, test.labels)
        tele = client.ala_state.last_telemetry if client.ala_state is not None else None
        init_rec = MetricsRecord(
            run_name, repeat, round_t, client.id, PHASE_INIT,
            init_train_loss, init_test_acc, 0,
            tele.epochs if tele is not None else 0,
            tele.drift if tele is not None else 0.0,
            0,
        )

        params = local_train(initialized, client.split, cfg, global_ref=global_,
                             round_t=round_t, client_id=client.id)

        trained_train_loss, _ = evaluate(params, train.features, train.labels)
        _, trained_test_acc = evaluate(params, test.features, test.labels)
        trained_rec = MetricsRecord(
            run_name, repeat, round_t, client.id, PHASE_TRAINED,
            trained_train_loss, trained_test_acc, 2 * num_params, 0, 0.0, 0,
        )
    except NumericError as exc:
        raise NumericError(f"client {client.id}, round {round_t}: {exc}") from exc

    trace = None
    if tele is not None and tele.round == round_t:
        trace = AlaTraceRecord(
            run_name, repeat, round_t, client.id,
            tele.epochs, tele.final_loss, tele.drift, tele.w_mean, tele.w_clip_frac,
        )

    client.local_model = params
    client.best_test_acc = max(client.best_test_acc, trained_test_acc)
    return init_rec, trained_rec, trace, params


def aggregate_models(template: ModelParams, uploads: list[tuple[float, ModelParams]]) -> ModelParams:
    """Weighted average of uploaded models; weights are renormalized to sum to
    one, and the fold order is the caller's (ascending client id) so the
    floating-point reduction is scheduling-independent."""
    if not uploads:
        raise ConfigError("aggregate_models needs at least one upload")
    k_sum = sum(k for k, _ in uploads)
    if not k_sum > 0:
        raise ConfigError("aggregation weights must sum to a positive value")
    layers = [LayerTensor(t.name, t.shape, np.zeros(t.data.size), t.layer_index) for t in template.layers]
    out = ModelParams(layers)
    for k, params in uploads:
        if not template.shape_compatible(params):
            raise ShapeMismatchError("upload shape does not match the server model")
        w = k / k_sum
        for dst, src in zip(out.layers, params.layers):
            saxpy_inplace(dst, w, src)
    return out


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)  # 0 means sequential


def run_round(
    server_model: ModelParams,
    clients: list[ClientState],
    cfg: FlConfig,
    round_t: int,
    run_name: str = "run",
    repeat: int = 0,
) -> tuple[ModelParams, RoundResult]:
    """One federated iteration: sample, init+train+eval per client, aggregate."""
    if round_t < 1:
        raise ConfigError(f"round_t must be >= 1, got {round_t}")
    num_params = server_model.num_params()
    m = cfg.num_participants()
    rng = spawn_rng(cfg.seed, PURPOSE_CLIENT_SAMPLING, round_t)
    participants = sorted(int(i) for i in rng.choice(len(clients), size=m, replace=False))

    work = [(clients[i], server_model, round_t, cfg, run_name, repeat, num_params) for i in participants]
    threads = _thread_count()
    if threads > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(work))) as pool:
            results = list(pool.map(lambda args: _client_round(*args), work))
    else:
        results = [_client_round(*args) for args in work]

    metrics: list[MetricsRecord] = []
    trace: list[AlaTraceRecord] = []
    uploaded: list[tuple[int, ModelParams]] = []
    for cid, (init_rec, trained_rec, trace_rec, params) in zip(participants, results):
        metrics.append(init_rec)
        metrics.append(trained_rec)
        if trace_rec is not None:
            trace.append(trace_rec)
        uploaded.append((cid, params))

    new_model = aggregate_models(server_model, [(clients[cid].k_weight, params) for cid, params in uploaded])

    comm = 2 * num_params * len(participants)
    return new_model, RoundResult(round_t, participants, uploaded, metrics, trace, comm)


def run_experiment(
    cfg: FlConfig,
    splits: list[ClientSplit],
    arch: ModelArch,
    run_name: str = "run",
    repeat: int = 0,
) -> ExperimentReport:
    """Run the full federated loop and return the metrics stream and summary."""
    global_model = init_params(arch, derive_seed(cfg.seed, PURPOSE_MODEL_INIT))
    num_params = global_model.num_params()

    clients = []
    total_train = sum(len(s.train) for s in splits)
    if len(splits) != cfg.num_clients:
        raise ConfigError(f"config says {cfg.num_clients} clients but partition produced {len(splits)}")
    for i, split in enumerate(splits):
        ala_state = ala_init_state(arch, cfg.ala) if cfg.strategy.uses_ala() else None
        clients.append(ClientState(i, split, global_model.copy(), len(split.train) / total_train, ala_state))

    union_features = np.concatenate([s.test.features for s in splits])
    union_labels = np.concatenate([s.test.labels for s in splits])

    records: list[MetricsRecord] = []
    trace: list[AlaTraceRecord] = []
    server_loss_series: list[float] = []
    server_acc_series: list[float] = []
    g_init_series: list[float] = []
    g_trained_series: list[float] = []
    total_comm = 0

    for round_t in range(1, cfg.rounds + 1):
        global_model, result = run_round(global_model, clients, cfg, round_t, run_name, repeat)
        records.extend(result.per_client_metrics)
        trace.extend(result.ala_trace)
        total_comm += result.comm_params

        # Weighted global objective over this round's participants, for the
        # initialized and the trained local models.
        k_sum = sum(clients[cid].k_weight for cid in result.participants)
        by_phase = {PHASE_INIT: 0.0, PHASE_TRAINED: 0.0}
        for rec in result.per_client_metrics:
            by_phase[rec.phase] += clients[rec.client_id].k_weight / k_sum * rec.loss
        g_init_series.append(by_phase[PHASE_INIT])
        g_trained_series.append(by_phase[PHASE_TRAINED])

        server_loss, server_acc = evaluate(global_model, union_features, union_labels)
        server_loss_series.append(server_loss)
        server_acc_series.append(server_acc)
        records.append(MetricsRecord(
            run_name, repeat, round_t, SERVER_CLIENT_ID, PHASE_SERVER,
            server_loss, server_acc, result.comm_params, 0, 0.0, 0,
        ))

    pfl_accuracy = float(np.mean([c.best_test_acc for c in clients]))
    traditional_accuracy = float(max(server_acc_series))
    return ExperimentReport(
        run_name=run_name,
        repeat=repeat,
        rounds=cfg.rounds,
        num_clients=cfg.num_clients,
        num_params=num_params,
        pfl_accuracy=pfl_accuracy,
        traditional_accuracy=traditional_accuracy,
        final_server_loss=server_loss_series[-1],
        final_server_acc=server_acc_series[-1],
        server_loss_series=server_loss_series,
        server_acc_series=server_acc_series,
        g_init_series=g_init_series,
        g_trained_series=g_trained_series,
        total_comm_params=total_comm,
        records=records,
        ala_trace=trace,
    )
