"""Dense per-layer parameter arrays and the element-wise ops on them.

Model parameters are an ordered list of named flat float64 arrays. The order
is fixed per architecture and identical on the server and every client, which
is what makes weighted averaging and element-wise interpolation well defined.
No broadcasting anywhere: a shape mismatch is a bug upstream and raises.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatchError


@dataclass
class LayerTensor:
    """One named parameter group: flat float64 data plus its logical shape.

    ``layer_index`` groups entries into logical layers (a weight matrix and
    its bias share an index); the model module assigns it.
    """

    name: str
    shape: tuple[int, ...]
    data: np.ndarray
    layer_index: int = 0

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        self.data = np.ascontiguousarray(self.data, dtype=np.float64).ravel()
        n = 1
        for s in self.shape:
            if s <= 0:
                raise ShapeMismatchError(f"layer {self.name!r}: non-positive dim in shape {self.shape}")
            n *= s
        if n != self.data.size:
            raise ShapeMismatchError(
                f"layer {self.name!r}: shape {self.shape} implies {n} elements, got {self.data.size}"
            )

    def view(self) -> np.ndarray:
        """Row-major view of the data in its logical shape."""
        return self.data.reshape(self.shape)

    def copy(self) -> "LayerTensor":
        return LayerTensor(self.name, self.shape, self.data.copy(), self.layer_index)


@dataclass
class ModelParams:
    """Ordered list of layer tensors; the unit of download/upload/aggregation."""

    layers: list[LayerTensor] = field(default_factory=list)

    def __post_init__(self):
        names = [t.name for t in self.layers]
        if len(set(names)) != len(names):
            raise ShapeMismatchError(f"duplicate layer names: {names}")

    def __iter__(self):
        return iter(self.layers)

    def __len__(self) -> int:
        return len(self.layers)

    def __getitem__(self, i: int) -> LayerTensor:
        return self.layers[i]

    def by_name(self, name: str) -> LayerTensor:
        for t in self.layers:
            if t.name == name:
                return t
        raise KeyError(name)

    def num_params(self) -> int:
        return sum(t.data.size for t in self.layers)

    def copy(self) -> "ModelParams":
        return ModelParams([t.copy() for t in self.layers])

    def shape_compatible(self, other: "ModelParams") -> bool:
        if len(self.layers) != len(other.layers):
            return False
        return all(
            a.name == b.name and a.shape == b.shape
            for a, b in zip(self.layers, other.layers)
        )


@dataclass
class AggregationWeights:
    """Element-wise interpolation weights covering the top layers of a model.

    One tensor per covered parameter entry, shaped exactly like that entry,
    every element in [0, 1]. May be empty (range-zero degenerates to plain
    overwrite-with-global).
    """

    tensors: list[LayerTensor] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.tensors)

    def __iter__(self):
        return iter(self.tensors)

    def copy(self) -> "AggregationWeights":
        return AggregationWeights([t.copy() for t in self.tensors])

    def num_params(self) -> int:
        return sum(t.data.size for t in self.tensors)


def _check_same_shape(a: LayerTensor, b: LayerTensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{op}: shape {a.shape} ({a.name!r}) vs {b.shape} ({b.name!r})")


def hadamard(a: LayerTensor, b: LayerTensor) -> LayerTensor:
    """Element-wise product of two same-shape tensors."""
    _check_same_shape(a, b, "hadamard")
    return LayerTensor(a.name, a.shape, a.data * b.data, a.layer_index)


def saxpy_inplace(dst: LayerTensor, scale: float, src: LayerTensor) -> None:
    """dst += scale * src, element-wise."""
    _check_same_shape(dst, src, "saxpy")
    dst.data += scale * src.data


def clip01_inplace(w: LayerTensor) -> None:
    """Clamp every element into [0, 1]; in-range values are untouched."""
    np.clip(w.data, 0.0, 1.0, out=w.data)


def _check_compatible(local: ModelParams, global_: ModelParams) -> None:
    if not local.shape_compatible(global_):
        raise ShapeMismatchError(
            "interpolate: local and global params are not shape-compatible "
            f"({[t.name for t in local]} vs {[t.name for t in global_]})"
        )


def interpolate(local: ModelParams, global_: ModelParams, w: AggregationWeights) -> ModelParams:
    """Blend local and global params under element-wise weights on the top entries.

    The trailing ``len(w)`` entries get ``local + (global - local) * w``
    (computed as ``local*(1-w) + global*w`` so w=1 reproduces the global
    entry exactly and w=0 the local one); every lower entry is a copy of the
    global entry, i.e. weight-one overwrite.
    """
    _check_compatible(local, global_)
    k = len(w.tensors)
    n = len(local.layers)
    if k > n:
        raise ShapeMismatchError(f"interpolate: weights cover {k} entries but model has {n}")
    out: list[LayerTensor] = []
    for i, (lt, gt) in enumerate(zip(local.layers, global_.layers)):
        if i < n - k:
            out.append(gt.copy())
        else:
            wt = w.tensors[i - (n - k)]
            if wt.shape != lt.shape:
                raise ShapeMismatchError(
                    f"interpolate: weight {wt.name!r} shape {wt.shape} vs entry {lt.name!r} {lt.shape}"
                )
            blended = lt.data * (1.0 - wt.data) + gt.data * wt.data
            out.append(LayerTensor(lt.name, lt.shape, blended, lt.layer_index))
    return ModelParams(out)
