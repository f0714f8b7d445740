"""The three credit-assignment rules.

All rules consume an ActivationTrace plus labels and emit gradients shaped
exactly like the parameters they update (ParameterSet for forward parameters,
DecoderSet for the DTP decoders). Gradients are batch means.

Backprop and feedback alignment share one delta recursion over the (possibly
dense) DAG: working from the top down,

    delta[l] = activation'(pre[l]) * sum over receivers i > l of
               transport(delta[i], T[i, l])

where for BP the transport matrix T[i, l] is the forward weight W[i, l] itself
(so the transport is W^T in the usual sense) and for FA it is a fixed random
matrix of the same shape. The classifier's transport into the last hidden layer
is part of the recursion and keyed (depth + 1, depth); every layer's own weight
gradient is the exact local outer product delta[l] x h[j].

DTP never transports derivatives. Decoders g[j->l] (one per forward-connected
pair, destination >= 1) learn approximate inverses; targets are computed top
down with the difference correction and each layer minimizes its squared
distance to its own target through its own parameters only.
"""

from dataclasses import dataclass, field

import numpy as np

from . import ops
from .network import ActivationTrace, NetworkSpec, ParameterSet, init_std
from .rng import RngStream


def _cls_key(spec: NetworkSpec) -> tuple:
    return (spec.depth + 1, spec.depth)


def _receivers(spec: NetworkSpec, layer: int):
    """Hidden layers that read `layer` directly (classifier handled separately)."""
    return [j for j in range(layer + 1, spec.depth + 1) if layer in spec.sources(j)]


@dataclass
class FeedbackSet:
    """Fixed random transport matrices, one per forward matrix (classifier
    included under key (depth+1, depth)). Frozen after construction."""

    matrices: dict
    seed: int = 0

    def as_dict(self) -> dict:
        return {f"fb{i}.{l}": self.matrices[(i, l)] for (i, l) in sorted(self.matrices)}


def build_feedback(spec: NetworkSpec, seed: int) -> FeedbackSet:
    """Draw feedback matrices with the forward init stddev policy."""
    stream = RngStream(seed)
    mats = {}
    for l in range(1, spec.depth + 1):
        for j in spec.sources(l):
            shape = spec.weight_shape(l, j)
            mats[(l, j)] = stream.normal(shape, init_std(shape))
    cls_shape = (spec.num_classes, spec.feature_size())
    mats[_cls_key(spec)] = stream.normal(cls_shape, init_std(cls_shape))
    return FeedbackSet(matrices=mats, seed=int(seed))


def feedback_from_weights(spec: NetworkSpec, params: ParameterSet) -> FeedbackSet:
    """The degenerate feedback set that makes FA coincide with BP."""
    mats = {k: w.copy() for k, w in params.weights.items()}
    mats[_cls_key(spec)] = params.classifier_weight.copy()
    return FeedbackSet(matrices=mats, seed=-1)


def _check_trace(spec: NetworkSpec, params: ParameterSet, trace: ActivationTrace):
    feat = trace.activations[spec.depth].reshape(trace.logits.shape[0], -1)
    if feat.shape[1] != params.classifier_weight.shape[1]:
        raise ValueError(f"stale trace: last hidden layer gives {feat.shape[1]} features, "
                         f"classifier expects {params.classifier_weight.shape[1]}")
    for (l, j), w in params.weights.items():
        if w.shape != spec.weight_shape(l, j):
            raise ValueError(f"weight ({l},{j}) has shape {w.shape}, "
                             f"spec expects {spec.weight_shape(l, j)}")


def _backward(spec: NetworkSpec, params: ParameterSet, trace: ActivationTrace,
              dlogits: np.ndarray, transport: dict) -> ParameterSet:
    """Shared delta recursion; `transport` maps (receiver, source) to the matrix
    carrying delta[receiver] back into source's activation space."""
    _check_trace(spec, params, trace)
    missing = (set(params.weights) | {_cls_key(spec)}) - set(transport)
    if missing:
        raise ValueError(f"missing feedback entry {sorted(missing)[0]}")
    h, pre = trace.activations, trace.pre_activations
    batch = dlogits.shape[0]
    grads = ParameterSet()

    feat = h[spec.depth].reshape(batch, -1)
    grads.classifier_weight = dlogits.T @ feat
    grads.classifier_bias = dlogits.sum(axis=0)

    dh = {l: None for l in range(1, spec.depth + 1)}
    top = dlogits @ transport[_cls_key(spec)]
    dh[spec.depth] = top.reshape(h[spec.depth].shape)

    for l in range(spec.depth, 0, -1):
        dhl = dh[l] if dh[l] is not None else np.zeros_like(h[l])
        delta = dhl * ops.activation_derivative(pre[l], spec.activation)
        if spec.family == "mlp":
            grads.biases[l] = delta.sum(axis=0)
        else:
            grads.biases[l] = delta.sum(axis=(0, 2, 3))
        for j in spec.sources(l):
            if spec.family == "mlp":
                grads.weights[(l, j)] = delta.T @ h[j]
            else:
                grads.weights[(l, j)] = ops.conv2d_kernel_grad(h[j], delta)
            if j >= 1:
                if spec.family == "mlp":
                    back = delta @ transport[(l, j)]
                else:
                    back = ops.conv2d_input_grad(delta, transport[(l, j)])
                dh[j] = back if dh[j] is None else dh[j] + back
    return grads


def backward_from_output_grad(spec: NetworkSpec, params: ParameterSet,
                              trace: ActivationTrace, dlogits: np.ndarray,
                              feedback: FeedbackSet | None = None) -> ParameterSet:
    """Run the delta recursion under an arbitrary output-loss gradient
    (batch-mean convention); BP transport when `feedback` is None."""
    if feedback is None:
        transport = dict(params.weights)
        transport[_cls_key(spec)] = params.classifier_weight
    else:
        transport = feedback.matrices
    return _backward(spec, params, trace, dlogits, transport)


def bp_backward(spec: NetworkSpec, params: ParameterSet, trace: ActivationTrace,
                labels: np.ndarray) -> ParameterSet:
    """Exact reverse-mode gradients of the softmax cross-entropy loss."""
    _, dlogits = ops.softmax_xent(trace.logits, labels)
    return backward_from_output_grad(spec, params, trace, dlogits)


def fa_backward(spec: NetworkSpec, params: ParameterSet, feedback: FeedbackSet,
                trace: ActivationTrace, labels: np.ndarray) -> ParameterSet:
    """BP with every inter-layer transport replaced by the fixed feedback
    matrix; local outer products stay exact."""
    _, dlogits = ops.softmax_xent(trace.logits, labels)
    return backward_from_output_grad(spec, params, trace, dlogits, feedback=feedback)


# ---------------------------------------------------------------------------
# Difference target propagation


@dataclass
class DecoderSet:
    """Per-pair decoders g[j->l](h) = act(V h + c) for every forward-connected
    pair with source j > destination l >= 1; the classifier participates as
    source depth+1. Collectively these are the lambda parameters."""

    weights: dict = field(default_factory=dict)
    biases: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {}
        for (j, l) in sorted(self.weights):
            out[f"dec{j}.{l}.w"] = self.weights[(j, l)]
        for (j, l) in sorted(self.biases):
            out[f"dec{j}.{l}.b"] = self.biases[(j, l)]
        return out

    @classmethod
    def from_dict(cls, named: dict) -> "DecoderSet":
        dec = cls()
        for name, arr in named.items():
            body, kind = name.rsplit(".", 1)
            j, l = body[3:].split(".")
            (dec.weights if kind == "w" else dec.biases)[(int(j), int(l))] = arr
        return dec

    def pairs(self):
        return sorted(self.weights)


@dataclass
class TargetSet:
    """Per-layer target activations, keys 1..depth plus depth+1 (the output).
    Carries the per-example output-loss gradient so the classifier's local
    update does not need the labels again."""

    targets: dict
    output_grad: np.ndarray


def decoder_pairs(spec: NetworkSpec):
    """All (source, destination) decoder pairs for `spec`, destination >= 1."""
    pairs = []
    for j in range(2, spec.depth + 1):
        pairs.extend((j, l) for l in spec.sources(j) if l >= 1)
    pairs.append(_cls_key(spec))
    return pairs


def _decoder_shape(spec: NetworkSpec, j: int, l: int) -> tuple:
    if j == spec.depth + 1:
        return (spec.feature_size(), spec.num_classes)
    if spec.family == "mlp":
        return (spec.units(l), spec.units(j))
    return (spec.units(l), spec.units(j), 3, 3)


def build_decoders(spec: NetworkSpec, seed: int) -> DecoderSet:
    stream = RngStream(seed)
    dec = DecoderSet()
    for (j, l) in decoder_pairs(spec):
        shape = _decoder_shape(spec, j, l)
        dec.weights[(j, l)] = stream.normal(shape, init_std(shape))
        if j == spec.depth + 1 or spec.family == "mlp":
            dec.biases[(j, l)] = np.zeros(shape[0])
        else:
            dec.biases[(j, l)] = np.zeros(spec.units(l))
    return dec


def _decode_pre(spec: NetworkSpec, decoders: DecoderSet, j: int, l: int,
                value: np.ndarray) -> np.ndarray:
    """Decoder pre-activation V value + c, reshaped into layer l's geometry."""
    v = decoders.weights[(j, l)]
    c = decoders.biases[(j, l)]
    if j == spec.depth + 1:
        out = value @ v.T + c
        if spec.family == "conv":
            out = out.reshape(value.shape[0], spec.channels,
                              spec.input_shape[1], spec.input_shape[2])
        return out
    if spec.family == "mlp":
        return value @ v.T + c
    return ops.conv2d_forward(value, v, c)


def decode(spec: NetworkSpec, decoders: DecoderSet, j: int, l: int,
           value: np.ndarray) -> np.ndarray:
    return ops.activation_apply(_decode_pre(spec, decoders, j, l, value), spec.activation)


def dtp_targets(spec: NetworkSpec, params: ParameterSet, decoders: DecoderSet,
                trace: ActivationTrace, labels: np.ndarray,
                target_step: float) -> TargetSet:
    """Top-down target computation.

    The output target is a gradient step on the per-example output loss; each
    hidden target subtracts the difference correction
    sum over receivers j of g[j->l](h[j]) - g[j->l](target[j]),
    evaluated in decreasing layer order so every target[j] already exists.
    """
    h = trace.activations
    out = spec.depth + 1
    per_example = ops.softmax(trace.logits)
    per_example[np.arange(trace.logits.shape[0]), np.asarray(labels)] -= 1.0
    targets = {out: trace.logits - target_step * per_example}
    for l in range(spec.depth, 0, -1):
        receivers = _receivers(spec, l)
        if l == spec.depth:
            receivers = receivers + [out]
        correction = np.zeros_like(h[l])
        for j in receivers:
            hj = trace.logits if j == out else h[j]
            if (j, l) not in decoders.weights:
                raise ValueError(f"missing decoder pair ({j}, {l})")
            correction += decode(spec, decoders, j, l, hj)
            correction -= decode(spec, decoders, j, l, targets[j])
        targets[l] = h[l] - correction
    return TargetSet(targets=targets, output_grad=per_example)


def dtp_forward_grads(spec: NetworkSpec, params: ParameterSet,
                      trace: ActivationTrace, targets: TargetSet) -> ParameterSet:
    """Local layer losses ||h[l] - target[l]||^2 (targets constant), gradients
    through each layer's own parameters only; the classifier is trained by the
    true output-loss gradient."""
    h, pre = trace.activations, trace.pre_activations
    batch = trace.logits.shape[0]
    grads = ParameterSet()
    for l in range(1, spec.depth + 1):
        tl = targets.targets[l]
        if tl.shape != h[l].shape:
            raise ValueError(f"target for layer {l} has shape {tl.shape}, "
                             f"trace has {h[l].shape}")
        delta = (2.0 / batch) * (h[l] - tl) * ops.activation_derivative(pre[l], spec.activation)
        if spec.family == "mlp":
            grads.biases[l] = delta.sum(axis=0)
        else:
            grads.biases[l] = delta.sum(axis=(0, 2, 3))
        for j in spec.sources(l):
            if spec.family == "mlp":
                grads.weights[(l, j)] = delta.T @ h[j]
            else:
                grads.weights[(l, j)] = ops.conv2d_kernel_grad(h[j], delta)
    dlogits = targets.output_grad / batch
    feat = h[spec.depth].reshape(batch, -1)
    grads.classifier_weight = dlogits.T @ feat
    grads.classifier_bias = dlogits.sum(axis=0)
    return grads


def dtp_decoder_grads(spec: NetworkSpec, params: ParameterSet, decoders: DecoderSet,
                      trace: ActivationTrace, noise_std: float,
                      rng: RngStream) -> DecoderSet:
    """Reconstruction gradients for the decoder parameters.

    For each pair (j, l): corrupt the recorded h[l], push the corruption through
    that pair's forward path (all other source contributions held at their
    recorded values), and differentiate ||g[j->l](corrupted forward) - corrupted||^2
    with respect to the decoder parameters only. Pairs are visited in sorted
    order so a given stream seed yields identical noise.
    """
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    h, pre = trace.activations, trace.pre_activations
    out = spec.depth + 1
    batch = trace.logits.shape[0]
    grads = DecoderSet()
    for (j, l) in decoders.pairs():
        noise = rng.normal(h[l].shape, 1.0) * noise_std
        corrupted = h[l] + noise
        # pushing only the noise through the pair's forward map equals
        # recomputing it with the other sources' contributions held fixed
        if j == out:
            f = trace.logits + noise.reshape(batch, -1) @ params.classifier_weight.T
        else:
            w = params.weights[(j, l)]
            if spec.family == "mlp":
                f = ops.activation_apply(pre[j] + noise @ w.T, spec.activation)
            else:
                f = ops.activation_apply(
                    pre[j] + ops.conv2d_forward(noise, w, np.zeros(w.shape[0])),
                    spec.activation)
        rec_pre = _decode_pre(spec, decoders, j, l, f)
        rec = ops.activation_apply(rec_pre, spec.activation)
        dpre = (2.0 / batch) * (rec - corrupted) * ops.activation_derivative(
            rec_pre, spec.activation)
        if j == out:
            grads.weights[(j, l)] = dpre.reshape(batch, -1).T @ f
            grads.biases[(j, l)] = dpre.reshape(batch, -1).sum(axis=0)
        elif spec.family == "mlp":
            grads.weights[(j, l)] = dpre.T @ f
            grads.biases[(j, l)] = dpre.sum(axis=0)
        else:
            grads.weights[(j, l)] = ops.conv2d_kernel_grad(f, dpre)
            grads.biases[(j, l)] = dpre.sum(axis=(0, 2, 3))
    return grads
