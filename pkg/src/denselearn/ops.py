"""Shape-checked numeric primitives: dense and convolutional forward maps,
activations and their derivatives, and the softmax cross-entropy loss.

Everything is float64. Ops validate shapes before touching data and raise
ValueError naming the offending shapes.
"""

import numpy as np

ACTIVATION_KINDS = ("sigmoid", "relu", "identity", "softmax")


def _require(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def linear_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """out[b, j] = sum_i weight[j, i] * x[b, i] + bias[j]."""
    _require(x.ndim == 2 and weight.ndim == 2,
             f"linear_forward expects 2-d input/weight, got {x.shape} and {weight.shape}")
    _require(x.shape[1] == weight.shape[1],
             f"linear_forward shape mismatch: input {x.shape} vs weight {weight.shape}")
    _require(bias.shape == (weight.shape[0],),
             f"linear_forward bias shape {bias.shape} does not match weight {weight.shape}")
    return x @ weight.T + bias


def conv2d_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 cross-correlation, stride 1, zero padding 1 (same-size output).

    x: (batch, c_in, h, w), kernel: (c_out, c_in, 3, 3), bias: (c_out,).
    """
    _require(x.ndim == 4 and kernel.ndim == 4,
             f"conv2d_forward expects 4-d input/kernel, got {x.shape} and {kernel.shape}")
    _require(kernel.shape[2:] == (3, 3), f"kernel spatial size must be 3x3, got {kernel.shape}")
    _require(x.shape[1] == kernel.shape[1],
             f"conv2d_forward channel mismatch: input {x.shape} vs kernel {kernel.shape}")
    _require(bias.shape == (kernel.shape[0],),
             f"conv2d_forward bias shape {bias.shape} does not match kernel {kernel.shape}")
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    # windows: (batch, c_in, h, w, 3, 3)
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))
    out = np.tensordot(win, kernel, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2)) + bias[None, :, None, None]


def conv2d_input_grad(delta: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Adjoint of conv2d_forward w.r.t. its input (full correlation with the
    spatially flipped, channel-swapped kernel)."""
    flipped = np.ascontiguousarray(kernel.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
    return conv2d_forward(delta, flipped, np.zeros(flipped.shape[0]))


def conv2d_kernel_grad(x: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Adjoint of conv2d_forward w.r.t. the kernel.

    x: (batch, c_in, h, w) forward input, delta: (batch, c_out, h, w).
    Returns (c_out, c_in, 3, 3).
    """
    _require(x.shape[0] == delta.shape[0] and x.shape[2:] == delta.shape[2:],
             f"conv2d_kernel_grad mismatch: input {x.shape} vs delta {delta.shape}")
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))
    # contract batch and both spatial dims: -> (c_out, c_in, 3, 3)
    return np.tensordot(delta, win, axes=([0, 2, 3], [0, 2, 3]))


def activation_apply(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sigmoid":
        out = np.empty_like(pre, dtype=np.float64)
        pos = pre >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-pre[pos]))
        ez = np.exp(pre[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if kind == "relu":
        return np.maximum(pre, 0.0)
    if kind == "identity":
        return np.asarray(pre, dtype=np.float64).copy()
    if kind == "softmax":
        return softmax(pre)
    raise ValueError(f"unknown activation kind {kind!r}")


def activation_derivative(pre: np.ndarray, kind: str) -> np.ndarray:
    """Elementwise derivative evaluated at the pre-activation."""
    if kind == "sigmoid":
        s = activation_apply(pre, "sigmoid")
        return s * (1.0 - s)
    if kind == "relu":
        return (pre > 0).astype(np.float64)
    if kind == "identity":
        return np.ones_like(pre, dtype=np.float64)
    if kind == "softmax":
        raise ValueError("softmax has no elementwise derivative; it is folded into the loss")
    raise ValueError(f"unknown activation kind {kind!r}")


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy of softmax(logits) against integer labels.

    Returns (loss, grad) with grad = (softmax - onehot) / batch, so downstream
    parameter gradients are batch means.
    """
    _require(logits.ndim == 2, f"softmax_xent expects 2-d logits, got {logits.shape}")
    labels = np.asarray(labels)
    _require(labels.shape == (logits.shape[0],),
             f"labels shape {labels.shape} does not match logits {logits.shape}")
    n_classes = logits.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels must lie in 0..{n_classes - 1}, got range "
                         f"[{labels.min()}, {labels.max()}]")
    batch = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(logsumexp - shifted[np.arange(batch), labels]))
    grad = softmax(logits)
    grad[np.arange(batch), labels] -= 1.0
    return loss, grad / batch
