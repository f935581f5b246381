"""Adaptive local aggregation: learned element-wise blending of the downloaded
global model with the client's old local model, used as local initialization.

Each client keeps a persistent weight tensor per covered parameter entry
(the top-p logical layers, elements in [0, 1], started at ones). Per round it
re-learns those weights by gradient descent on the local loss of the blended
model: the weight gradient is the blended-model parameter gradient scaled
element-wise by the update term (global - local). Weights are clipped into
[0, 1] after every step. The first round the hook is a no-op (global and
local coincide); the first active round trains the weights to convergence;
every later round runs a single epoch to track the moving models.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import Dataset, sample_fraction
from .errors import ConfigError, NumericError
from .models import Batch, ModelArch, backward, forward_loss, top_entry_templates
from .rng import spawn_rng
from .tensors import AggregationWeights, LayerTensor, ModelParams, clip01_inplace, interpolate

logger = logging.getLogger(__name__)

# Convergence floor for the initial stage; the cap lives in AlaConfig.
INIT_MIN_EPOCHS = 6


@dataclass(frozen=True)
class AlaConfig:
    p: int = 1
    s_percent: float = 80.0
    eta: float = 1.0
    init_stage_round: int = 2
    init_max_epochs: int = 40
    init_converge_window: int = 3
    init_converge_tol: float = 1e-4
    batch_size: int = 10  # mirrors the local-training batch size

    def __post_init__(self):
        if self.p < 0:
            raise ConfigError("ala.p must be >= 0")
        if not 0 < self.s_percent <= 100:
            raise ConfigError("ala.s_percent must be in (0, 100]")
        if self.eta < 0:
            raise ConfigError("ala.eta must be >= 0")
        if self.init_stage_round < 1:
            raise ConfigError("ala.init_stage_round must be >= 1")
        if self.init_max_epochs < 1 or self.init_converge_window < 1:
            raise ConfigError("ala.init_max_epochs and init_converge_window must be positive")
        if not self.init_converge_tol > 0:
            raise ConfigError("ala.init_converge_tol must be > 0")
        if self.batch_size < 1:
            raise ConfigError("ala.batch_size must be positive")


@dataclass
class AlaTelemetry:
    """What one local-init call did, for the metrics stream."""

    round: int
    epochs: int
    final_loss: float
    drift: float
    w_mean: float
    w_clip_frac: float


@dataclass
class AlaState:
    """Per-client persistent aggregation weights plus the init-stage flag."""

    weights: AggregationWeights
    initialized: bool = False
    last_telemetry: AlaTelemetry | None = None


def ala_init_state(arch: ModelArch, cfg: AlaConfig) -> AlaState:
    """All-ones weights over the top-p logical layers of the architecture."""
    try:
        templates = top_entry_templates(arch, cfg.p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    tensors = [
        LayerTensor(t.name, t.shape, np.ones(t.data.size), t.layer_index) for t in templates
    ]
    return AlaState(weights=AggregationWeights(tensors))


def weight_step(
    weights: AggregationWeights,
    head_grads: list[np.ndarray],
    update_terms: list[np.ndarray],
    eta: float,
) -> None:
    """One gradient step on the weights followed by the [0, 1] clip.

    The weight gradient is formed as eta * (grad ⊙ update); overflow in the
    scale saturates to +/-inf, which the clip maps to the nearest bound.
    """
    with np.errstate(over="ignore"):
        for wt, g, u in zip(weights, head_grads, update_terms):
            wt.data -= eta * (g * u)
            clip01_inplace(wt)


def _weight_stats(weights: AggregationWeights) -> tuple[float, float]:
    total = weights.num_params()
    if total == 0:
        return 0.0, 0.0
    s = sum(float(t.data.sum()) for t in weights)
    at_bounds = sum(int(np.count_nonzero((t.data == 0.0) | (t.data == 1.0))) for t in weights)
    return s / total, at_bounds / total


def ala_weight_drift(state_before: AlaState, state_after: AlaState) -> float:
    """Max absolute element-wise weight change between two states."""
    drift = 0.0
    for a, b in zip(state_before.weights, state_after.weights):
        if a.shape != b.shape:
            raise ConfigError("weight drift: states have mismatched shapes")
        if a.data.size:
            drift = max(drift, float(np.max(np.abs(b.data - a.data))))
    return drift


def _batches(subset: Dataset, order: np.ndarray, batch_size: int):
    for start in range(0, order.size, batch_size):
        idx = order[start : start + batch_size]
        yield Batch(subset.features[idx], subset.labels[idx])


def ala_local_init(
    state: AlaState,
    local: ModelParams,
    global_: ModelParams,
    train_data: Dataset,
    round_t: int,
    cfg: AlaConfig,
    seed: int,
) -> ModelParams:
    """Blend local and global params for this round, learning the weights first.

    Returns the initialized model; never touches ``local`` or ``global_``.
    The weights live on in ``state`` for the client's next participation.
    """
    if round_t < 1:
        raise ConfigError(f"round_t must be >= 1, got {round_t}")
    if round_t == 1 or (not state.initialized and round_t < cfg.init_stage_round):
        # First iteration(s): global and local coincide, nothing to learn yet.
        state.last_telemetry = AlaTelemetry(round_t, 0, float("nan"), 0.0, *_weight_stats(state.weights))
        return global_.copy()

    if len(state.weights) == 0 or cfg.eta == 0.0:
        # Range zero or zero step size: no weight-learning steps to take.
        state.last_telemetry = AlaTelemetry(round_t, 0, float("nan"), 0.0, *_weight_stats(state.weights))
        return interpolate(local, global_, state.weights)

    k = len(state.weights)
    update_terms = [g.data - l.data for l, g in zip(local.layers[-k:], global_.layers[-k:])]
    before = [t.data.copy() for t in state.weights]

    subset = sample_fraction(train_data, cfg.s_percent, seed ^ round_t)
    shuffle_rng = spawn_rng(seed, round_t)

    initial_stage = not state.initialized
    max_epochs = cfg.init_max_epochs if initial_stage else 1
    epoch_losses: list[float] = []
    warned = False

    for epoch in range(1, max_epochs + 1):
        order = shuffle_rng.permutation(len(subset))
        batch_losses = []
        for batch in _batches(subset, order, cfg.batch_size):
            theta = interpolate(local, global_, state.weights)
            try:
                loss, cache = forward_loss(theta, batch)
            except NumericError as exc:
                raise NumericError(f"weight learning diverged (round {round_t}, epoch {epoch}): {exc}") from exc
            grad = backward(theta, cache)
            weight_step(state.weights, [g.data for g in grad.layers[-k:]], update_terms, cfg.eta)
            batch_losses.append(loss)
        mean_loss = float(np.mean(batch_losses))
        epoch_losses.append(mean_loss)
        if initial_stage:
            if not warned and len(epoch_losses) > 1 and mean_loss > epoch_losses[-2] * (1 + 1e-12):
                logger.warning(
                    "weight-learning loss increased in round %d epoch %d (%.6g -> %.6g); "
                    "eta may be too large",
                    round_t, epoch, epoch_losses[-2], mean_loss,
                )
                warned = True
            w = cfg.init_converge_window
            if epoch >= INIT_MIN_EPOCHS and epoch > w:
                ref = epoch_losses[-1 - w]
                if abs(mean_loss - ref) < cfg.init_converge_tol * max(abs(ref), 1e-12):
                    break

    if initial_stage:
        state.initialized = True

    drift = 0.0
    for prev, t in zip(before, state.weights):
        if prev.size:
            drift = max(drift, float(np.max(np.abs(t.data - prev))))
    state.last_telemetry = AlaTelemetry(
        round_t, len(epoch_losses), epoch_losses[-1], drift, *_weight_stats(state.weights)
    )
    return interpolate(local, global_, state.weights)


def ala_equivalence_check(
    state: AlaState,
    local: ModelParams,
    global_: ModelParams,
    batch: Batch,
    eta: float,
) -> tuple[ModelParams, ModelParams]:
    """Two routes to the same updated blended model, for testing.

    Route one: a single unclipped weight gradient step followed by
    interpolation. Route two: the direct update of the blended model by the
    squared update term times its own gradient. Requires full-range weights.
    """
    if len(state.weights) != len(local.layers):
        raise ConfigError("equivalence check requires weights covering every entry (p = full)")
    theta_hat = interpolate(local, global_, state.weights)
    _, cache = forward_loss(theta_hat, batch)
    grad = backward(theta_hat, cache)

    stepped = []
    for wt, g, l, gl in zip(state.weights, grad.layers, local.layers, global_.layers):
        upd = gl.data - l.data
        stepped.append(LayerTensor(wt.name, wt.shape, wt.data - eta * g.data * upd, wt.layer_index))
    theta_via_w = interpolate(local, global_, AggregationWeights(stepped))

    direct = []
    for th, g, l, gl in zip(theta_hat.layers, grad.layers, local.layers, global_.layers):
        upd = gl.data - l.data
        direct.append(LayerTensor(th.name, th.shape, th.data - eta * upd * upd * g.data, th.layer_index))
    return theta_via_w, ModelParams(direct)
