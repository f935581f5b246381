"""Shared helpers: random problem instances, finite-difference oracles, and
the acceptance-criteria summary printed at the end of the run."""

from __future__ import annotations

import numpy as np
import pytest

from fedala_sim.models import Batch, ModelArch, forward_loss, init_params
from fedala_sim.models import LINEAR_SOFTMAX, MLP_1_HIDDEN
from fedala_sim.tensors import ModelParams

# ---------------------------------------------------------------------------
# acceptance-criteria reporting

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[name] = (passed, detail)
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] {name}" + (f" — {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, (ok, detail) in ACCEPTANCE_RESULTS.items():
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {name}" + (f" — {detail}" if detail else "")
        terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# random instances

ARCHS = (
    ModelArch(LINEAR_SOFTMAX, 5, 4),
    ModelArch(MLP_1_HIDDEN, 5, 4, hidden_dim=3),
)


def rand_batch(rng: np.random.Generator, arch: ModelArch, b: int = 7) -> Batch:
    feats = rng.normal(size=(b, arch.input_dim))
    labels = rng.integers(0, arch.num_classes, size=b)
    return Batch(feats, labels)


def rand_params(rng: np.random.Generator, arch: ModelArch) -> ModelParams:
    params = init_params(arch, int(rng.integers(0, 2**32)))
    for t in params:
        t.data += 0.3 * rng.normal(size=t.data.size)
    return params


# ---------------------------------------------------------------------------
# finite-difference oracles

def numeric_param_grad(params: ModelParams, batch: Batch, eps: float = 1e-6) -> ModelParams:
    """Central finite differences of the mean batch loss wrt every parameter."""
    out = params.copy()
    for t_ref, t_out in zip(params, out):
        for j in range(t_ref.data.size):
            orig = t_ref.data[j]
            t_ref.data[j] = orig + eps
            lo_hi, _ = forward_loss(params, batch)
            t_ref.data[j] = orig - eps
            lo_lo, _ = forward_loss(params, batch)
            t_ref.data[j] = orig
            t_out.data[j] = (lo_hi - lo_lo) / (2 * eps)
    return out


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    """Max element-wise relative error with a symmetric denominator."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    return float(np.max(np.abs(a - b) / (np.abs(a) + np.abs(b) + 1e-12)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
