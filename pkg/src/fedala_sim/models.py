"""Small classifiers with closed-form forward/backward passes.

Two architectures: a linear softmax classifier and a one-hidden-layer ReLU
MLP. Gradients are hand-derived (no autodiff) and checked against central
finite differences in the test suite. Parameter entries are ordered from the
lowest layer to the classification head, so a range-p aggregation hook that
takes the top layer always lands on the head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeMismatchError, StaleCacheError
from .tensors import LayerTensor, ModelParams

LINEAR_SOFTMAX = "linear-softmax"
MLP_1_HIDDEN = "mlp-1-hidden"
ARCH_KINDS = (LINEAR_SOFTMAX, MLP_1_HIDDEN)


@dataclass(frozen=True)
class ModelArch:
    kind: str
    input_dim: int
    num_classes: int
    hidden_dim: int = 0

    def __post_init__(self):
        if self.kind not in ARCH_KINDS:
            raise ValueError(f"unknown architecture kind {self.kind!r}")
        if self.input_dim < 1 or self.num_classes < 1:
            raise ValueError("input_dim and num_classes must be positive")
        if self.kind == MLP_1_HIDDEN and self.hidden_dim < 1:
            raise ValueError("mlp-1-hidden requires a positive hidden_dim")
        if self.kind == LINEAR_SOFTMAX and self.hidden_dim != 0:
            raise ValueError("linear-softmax takes no hidden_dim")

    def num_logical_layers(self) -> int:
        return 2 if self.kind == MLP_1_HIDDEN else 1


@dataclass
class Batch:
    """A minibatch: float64 features [b, input_dim] and int class labels [b]."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise ShapeMismatchError("batch: features must be [b, d], labels [b]")
        if self.features.shape[0] != self.labels.shape[0] or self.features.shape[0] < 1:
            raise ShapeMismatchError("batch: features/labels row counts differ or empty")

    def __len__(self) -> int:
        return self.labels.shape[0]


@dataclass
class ForwardCache:
    """Activations saved by forward_loss for the matching backward call."""

    params: ModelParams
    kind: str
    features: np.ndarray
    labels: np.ndarray
    probs: np.ndarray
    pre_hidden: np.ndarray | None = None
    hidden: np.ndarray | None = None


def init_params(arch: ModelArch, seed: int) -> ModelParams:
    """Seeded uniform init, bound sqrt(6 / (fan_in + fan_out)) per layer."""
    rng = np.random.default_rng(seed)

    def entry(name, fan_in, fan_out, shape, layer_index):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        return LayerTensor(name, shape, rng.uniform(-a, a, size=int(np.prod(shape))), layer_index)

    d, c = arch.input_dim, arch.num_classes
    if arch.kind == LINEAR_SOFTMAX:
        return ModelParams([
            entry("output.weight", d, c, (d, c), 0),
            entry("output.bias", d, c, (c,), 0),
        ])
    h = arch.hidden_dim
    return ModelParams([
        entry("hidden.weight", d, h, (d, h), 0),
        entry("hidden.bias", d, h, (h,), 0),
        entry("output.weight", h, c, (h, c), 1),
        entry("output.bias", h, c, (c,), 1),
    ])


def infer_arch(params: ModelParams) -> ModelArch:
    """Recover the architecture from parameter names and shapes."""
    names = [t.name for t in params]
    if names == ["output.weight", "output.bias"]:
        d, c = params[0].shape
        return ModelArch(LINEAR_SOFTMAX, d, c)
    if names == ["hidden.weight", "hidden.bias", "output.weight", "output.bias"]:
        d, h = params[0].shape
        _, c = params[2].shape
        return ModelArch(MLP_1_HIDDEN, d, c, hidden_dim=h)
    raise ShapeMismatchError(f"cannot infer architecture from layers {names}")


def top_entry_templates(arch: ModelArch, p: int) -> list[LayerTensor]:
    """Zero-filled tensors shaped like the entries of the top-p logical layers."""
    if p < 0 or p > arch.num_logical_layers():
        raise ValueError(f"p={p} out of range for {arch.kind} ({arch.num_logical_layers()} layers)")
    reference = init_params(arch, seed=0)
    cutoff = arch.num_logical_layers() - p
    return [
        LayerTensor(t.name, t.shape, np.zeros(t.data.size), t.layer_index)
        for t in reference
        if t.layer_index >= cutoff
    ]


def _check_finite_inputs(params: ModelParams, batch: Batch) -> None:
    for t in params:
        if not np.all(np.isfinite(t.data)):
            raise NumericError(f"non-finite values in parameter {t.name!r}")
    if not np.all(np.isfinite(batch.features)):
        raise NumericError("non-finite values in batch features")


def _softmax_ce(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    # log-sum-exp stabilized cross-entropy, mean over the batch
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    denom = exp.sum(axis=1, keepdims=True)
    probs = exp / denom
    log_probs = shifted - np.log(denom)
    loss = -float(np.mean(log_probs[np.arange(labels.shape[0]), labels]))
    return loss, probs


def forward_loss(params: ModelParams, batch: Batch) -> tuple[float, ForwardCache]:
    """Mean cross-entropy of the batch plus the cache backward needs."""
    arch = infer_arch(params)
    _check_finite_inputs(params, batch)
    if batch.features.shape[1] != arch.input_dim:
        raise ShapeMismatchError(
            f"batch feature dim {batch.features.shape[1]} != input_dim {arch.input_dim}"
        )
    if batch.labels.min() < 0 or batch.labels.max() >= arch.num_classes:
        raise ShapeMismatchError("batch labels out of class range")

    x = batch.features
    if arch.kind == LINEAR_SOFTMAX:
        logits = x @ params.by_name("output.weight").view() + params.by_name("output.bias").view()
        loss, probs = _softmax_ce(logits, batch.labels)
        cache = ForwardCache(params, arch.kind, x, batch.labels, probs)
    else:
        z1 = x @ params.by_name("hidden.weight").view() + params.by_name("hidden.bias").view()
        h = np.maximum(z1, 0.0)
        logits = h @ params.by_name("output.weight").view() + params.by_name("output.bias").view()
        loss, probs = _softmax_ce(logits, batch.labels)
        cache = ForwardCache(params, arch.kind, x, batch.labels, probs, pre_hidden=z1, hidden=h)
    if not np.isfinite(loss):
        raise NumericError("non-finite loss")
    return loss, cache


def backward(params: ModelParams, cache: ForwardCache) -> ModelParams:
    """Gradient of the mean batch loss, shaped exactly like params."""
    if cache.params is not params:
        raise StaleCacheError("cache was produced by a different parameter object")
    b = cache.labels.shape[0]
    dlogits = cache.probs.copy()
    dlogits[np.arange(b), cache.labels] -= 1.0
    dlogits /= b

    grads: list[LayerTensor] = []
    if cache.kind == LINEAR_SOFTMAX:
        dw = cache.features.T @ dlogits
        db = dlogits.sum(axis=0)
        grads = [
            LayerTensor("output.weight", dw.shape, dw.ravel(), 0),
            LayerTensor("output.bias", db.shape, db, 0),
        ]
    else:
        w2 = params.by_name("output.weight").view()
        dw2 = cache.hidden.T @ dlogits
        db2 = dlogits.sum(axis=0)
        dh = dlogits @ w2.T
        dz1 = dh * (cache.pre_hidden > 0.0)  # ReLU subgradient at 0 taken as 0
        dw1 = cache.features.T @ dz1
        db1 = dz1.sum(axis=0)
        grads = [
            LayerTensor("hidden.weight", dw1.shape, dw1.ravel(), 0),
            LayerTensor("hidden.bias", db1.shape, db1, 0),
            LayerTensor("output.weight", dw2.shape, dw2.ravel(), 1),
            LayerTensor("output.bias", db2.shape, db2, 1),
        ]
    return ModelParams(grads)


def sgd_step(params: ModelParams, grad: ModelParams, lr: float) -> None:
    """params -= lr * grad, in place."""
    if not params.shape_compatible(grad):
        raise ShapeMismatchError("sgd_step: grad not shape-compatible with params")
    for pt, gt in zip(params, grad):
        pt.data -= lr * gt.data


def evaluate(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """(mean loss, accuracy) of the model on the given samples."""
    batch = Batch(features, labels)
    loss, cache = forward_loss(params, batch)
    acc = float(np.mean(np.argmax(cache.probs, axis=1) == batch.labels))
    return loss, acc
