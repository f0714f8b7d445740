"""Network construction and forward evaluation.

A network is `depth` hidden layers followed by a linear classifier that reads
only the last hidden layer. With dense connectivity every hidden layer receives
a separate weight from each earlier layer *and* from the input (layer 0); the
per-source contributions are summed, which equals concatenating the sources and
multiplying one block matrix. Plain connectivity keeps only the chain weights.

Conv layers are 3x3 / stride 1 / pad 1, so all feature maps share the input's
spatial size and dense concatenation along channels is always well-defined.
"""

import json
import re
from dataclasses import dataclass, field

import numpy as np

from . import ops
from .rng import RngStream

FAMILIES = ("mlp", "conv")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description; `depth` counts hidden layers."""

    family: str = "mlp"
    dense: bool = False
    depth: int = 3
    hidden_units: int = 128
    channels: int = 16
    activation: str = "sigmoid"
    input_shape: tuple = (784,)
    num_classes: int = 10
    init_seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.activation not in ops.ACTIVATION_KINDS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.hidden_units < 1 or self.channels < 1 or self.num_classes < 1:
            raise ValueError("layer widths must be positive")
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        if self.family == "mlp" and len(self.input_shape) != 1:
            raise ValueError(f"mlp input_shape must be 1-d, got {self.input_shape}")
        if self.family == "conv" and len(self.input_shape) != 3:
            raise ValueError(f"conv input_shape must be (channels, h, w), got {self.input_shape}")

    def sources(self, layer: int):
        """Indices of the layers feeding `layer` (0 is the input)."""
        return range(layer) if self.dense else range(layer - 1, layer)

    def units(self, layer: int) -> int:
        """Width of a layer: feature count for mlp, channel count for conv."""
        if layer == 0:
            return self.input_shape[0] if self.family == "mlp" else self.input_shape[0]
        return self.hidden_units if self.family == "mlp" else self.channels

    def feature_size(self) -> int:
        """Flattened size of the last hidden layer (classifier input)."""
        if self.family == "mlp":
            return self.hidden_units
        return self.channels * self.input_shape[1] * self.input_shape[2]

    def weight_shape(self, layer: int, source: int) -> tuple:
        if self.family == "mlp":
            return (self.units(layer), self.units(source))
        return (self.units(layer), self.units(source), 3, 3)


@dataclass
class ParameterSet:
    """Forward weights/biases keyed by (layer, source), plus the classifier."""

    weights: dict = field(default_factory=dict)
    biases: dict = field(default_factory=dict)
    classifier_weight: np.ndarray = None
    classifier_bias: np.ndarray = None

    def as_dict(self) -> dict:
        """Canonically named, canonically ordered view of every array."""
        out = {}
        for (l, j) in sorted(self.weights):
            out[f"w{l}.{j}"] = self.weights[(l, j)]
        for l in sorted(self.biases):
            out[f"b{l}"] = self.biases[l]
        out["cls.w"] = self.classifier_weight
        out["cls.b"] = self.classifier_bias
        return out

    @classmethod
    def from_dict(cls, named: dict) -> "ParameterSet":
        ps = cls()
        for name, arr in named.items():
            m = re.fullmatch(r"w(\d+)\.(\d+)", name)
            if m:
                ps.weights[(int(m.group(1)), int(m.group(2)))] = arr
                continue
            m = re.fullmatch(r"b(\d+)", name)
            if m:
                ps.biases[int(m.group(1))] = arr
                continue
            if name == "cls.w":
                ps.classifier_weight = arr
            elif name == "cls.b":
                ps.classifier_bias = arr
            else:
                raise ValueError(f"unrecognized parameter name {name!r}")
        return ps

    def copy(self) -> "ParameterSet":
        return ParameterSet.from_dict({k: v.copy() for k, v in self.as_dict().items()})


@dataclass
class ActivationTrace:
    """Everything one forward pass produced, indexed by layer (0 = input)."""

    pre_activations: dict
    activations: dict
    logits: np.ndarray


def _glorot_std(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(2.0 / (fan_in + fan_out)))


def init_std(shape: tuple) -> float:
    """Init stddev policy: sqrt(2 / (fan_in + fan_out)); conv fans include the
    3x3 receptive field."""
    if len(shape) == 2:
        return _glorot_std(shape[1], shape[0])
    c_out, c_in, kh, kw = shape
    return _glorot_std(c_in * kh * kw, c_out * kh * kw)


def build_network(spec: NetworkSpec, seed: int | None = None) -> ParameterSet:
    """Initialize a ParameterSet for `spec` (weights Gaussian, biases zero).

    Draw order is fixed (layers ascending, sources ascending, classifier last)
    so equal seeds give bit-identical parameters.
    """
    stream = RngStream(spec.init_seed if seed is None else seed)
    ps = ParameterSet()
    for l in range(1, spec.depth + 1):
        for j in spec.sources(l):
            shape = spec.weight_shape(l, j)
            ps.weights[(l, j)] = stream.normal(shape, init_std(shape))
        ps.biases[l] = np.zeros(spec.units(l))
    cls_shape = (spec.num_classes, spec.feature_size())
    ps.classifier_weight = stream.normal(cls_shape, init_std(cls_shape))
    ps.classifier_bias = np.zeros(spec.num_classes)
    return ps


def _check_batch(spec: NetworkSpec, batch: np.ndarray):
    if batch.shape[1:] != spec.input_shape:
        raise ValueError(f"batch shape {batch.shape} does not match input shape "
                         f"{spec.input_shape} (plus leading batch dim)")


def forward(spec: NetworkSpec, params: ParameterSet, batch: np.ndarray) -> ActivationTrace:
    """Run the network, recording all pre-activations and activations.

    pre[l] = sum over sources j of W[l,j] applied to h[j], plus b[l];
    h[l] = activation(pre[l]); logits read h[depth] through the classifier.
    """
    _check_batch(spec, batch)
    h = {0: batch}
    pre = {}
    for l in range(1, spec.depth + 1):
        acc = None
        for j in spec.sources(l):
            w = params.weights[(l, j)]
            if spec.family == "mlp":
                contrib = h[j] @ w.T
            else:
                contrib = ops.conv2d_forward(h[j], w, np.zeros(w.shape[0]))
            acc = contrib if acc is None else acc + contrib
        if spec.family == "mlp":
            pre[l] = acc + params.biases[l]
        else:
            pre[l] = acc + params.biases[l][None, :, None, None]
        h[l] = ops.activation_apply(pre[l], spec.activation)
    feat = h[spec.depth].reshape(batch.shape[0], -1)
    logits = ops.linear_forward(feat, params.classifier_weight, params.classifier_bias)
    return ActivationTrace(pre_activations=pre, activations=h, logits=logits)


# ---------------------------------------------------------------------------
# Parameter checkpoint files: 8-byte little-endian header length, then a JSON
# header {name: {"shape": [...], "offset": int}}, then the raw float64
# little-endian buffers back to back. See README for the full layout.

def save_arrays(named: dict, path: str):
    header = {}
    offset = 0
    for name in named:
        arr = np.ascontiguousarray(named[name], dtype="<f8")
        header[name] = {"shape": list(arr.shape), "offset": offset}
        offset += arr.nbytes
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(len(blob).to_bytes(8, "little"))
        f.write(blob)
        for name in named:
            f.write(np.ascontiguousarray(named[name], dtype="<f8").tobytes())


def load_arrays(path: str) -> dict:
    with open(path, "rb") as f:
        hlen = int.from_bytes(f.read(8), "little")
        header = json.loads(f.read(hlen).decode())
        body = f.read()
    out = {}
    for name, meta in header.items():
        shape = tuple(meta["shape"])
        n = int(np.prod(shape)) if shape else 1
        start = meta["offset"]
        arr = np.frombuffer(body, dtype="<f8", count=n, offset=start).reshape(shape)
        out[name] = arr.copy()
    return out


def save_params(params: ParameterSet, path: str):
    save_arrays(params.as_dict(), path)


def load_params(path: str) -> ParameterSet:
    return ParameterSet.from_dict(load_arrays(path))
