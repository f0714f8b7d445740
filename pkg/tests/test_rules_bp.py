import numpy as np
import pytest

from denselearn import ops
from denselearn.network import NetworkSpec, ParameterSet, build_network, forward
from denselearn.rules import bp_backward


def loss_of(spec, params, x, labels):
    trace = forward(spec, params, x)
    return ops.softmax_xent(trace.logits, labels)[0]


def finite_diff_grads(spec, params, x, labels, eps=1e-5):
    """Central finite differences of the scalar loss wrt every parameter."""
    out = {}
    named = params.as_dict()
    for name, arr in named.items():
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            plus = {k: v.copy() for k, v in named.items()}
            minus = {k: v.copy() for k, v in named.items()}
            plus[name][idx] += eps
            minus[name][idx] -= eps
            g[idx] = (loss_of(spec, ParameterSet.from_dict(plus), x, labels)
                      - loss_of(spec, ParameterSet.from_dict(minus), x, labels)) / (2 * eps)
        out[name] = g
    return out


def test_zero_upstream_signal_gives_zero_grads():
    spec = NetworkSpec(family="mlp", dense=True, depth=2, hidden_units=4,
                       input_shape=(6,), init_seed=0)
    params = build_network(spec)
    x = np.random.default_rng(0).normal(size=(2, 6))
    trace = forward(spec, params, x)
    # saturate the correct class so the logit gradient vanishes
    trace.logits[:] = 0.0
    trace.logits[:, 3] = 1000.0
    grads = bp_backward(spec, params, trace, np.array([3, 3]))
    for name, g in grads.as_dict().items():
        assert np.abs(g).max() < 1e-12, name


def test_plain_depth2_matches_finite_differences():
    spec = NetworkSpec(family="mlp", dense=False, depth=2, hidden_units=3,
                       activation="sigmoid", input_shape=(4,), num_classes=10,
                       init_seed=1)
    params = build_network(spec)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 4))
    labels = np.array([2, 7])
    grads = bp_backward(spec, params, forward(spec, params, x), labels).as_dict()
    fd = finite_diff_grads(spec, params, x, labels)
    for name in fd:
        np.testing.assert_allclose(grads[name], fd[name], rtol=1e-6, atol=1e-9,
                                   err_msg=name)


def test_dense_relu_matches_finite_differences():
    spec = NetworkSpec(family="mlp", dense=True, depth=3, hidden_units=3,
                       activation="relu", input_shape=(4,), init_seed=2)
    params = build_network(spec)
    rng = np.random.default_rng(2)
    x = rng.normal(size=(2, 4)) + 0.1
    labels = np.array([0, 9])
    grads = bp_backward(spec, params, forward(spec, params, x), labels).as_dict()
    fd = finite_diff_grads(spec, params, x, labels)
    for name in fd:
        np.testing.assert_allclose(grads[name], fd[name], rtol=1e-5, atol=1e-8,
                                   err_msg=name)


def test_conv_dense_matches_finite_differences():
    spec = NetworkSpec(family="conv", dense=True, depth=2, channels=2,
                       activation="sigmoid", input_shape=(1, 4, 4), init_seed=3)
    params = build_network(spec)
    rng = np.random.default_rng(3)
    x = rng.normal(size=(2, 1, 4, 4))
    labels = np.array([1, 8])
    grads = bp_backward(spec, params, forward(spec, params, x), labels).as_dict()
    fd = finite_diff_grads(spec, params, x, labels)
    for name in fd:
        np.testing.assert_allclose(grads[name], fd[name], rtol=1e-6, atol=1e-9,
                                   err_msg=name)


def test_zeroed_skips_reproduce_plain_gradients_exactly():
    dense_spec = NetworkSpec(family="mlp", dense=True, depth=3, hidden_units=5,
                             input_shape=(6,), init_seed=4)
    plain_spec = NetworkSpec(family="mlp", dense=False, depth=3, hidden_units=5,
                             input_shape=(6,), init_seed=4)
    plain = build_network(plain_spec)
    dense = build_network(dense_spec)
    for (l, j) in list(dense.weights):
        dense.weights[(l, j)] = (plain.weights[(l, j)].copy() if j == l - 1
                                 else np.zeros_like(dense.weights[(l, j)]))
    dense.classifier_weight = plain.classifier_weight.copy()
    dense.classifier_bias = plain.classifier_bias.copy()
    x = np.random.default_rng(4).normal(size=(3, 6))
    labels = np.array([0, 1, 2])
    g_dense = bp_backward(dense_spec, dense, forward(dense_spec, dense, x), labels)
    g_plain = bp_backward(plain_spec, plain, forward(plain_spec, plain, x), labels)
    for (l, j), g in g_plain.weights.items():
        np.testing.assert_array_equal(g_dense.weights[(l, j)], g)
    for l, g in g_plain.biases.items():
        np.testing.assert_array_equal(g_dense.biases[l], g)
    np.testing.assert_array_equal(g_dense.classifier_weight, g_plain.classifier_weight)


def test_gradients_mirror_parameter_keys_and_shapes():
    spec = NetworkSpec(family="mlp", dense=True, depth=3, hidden_units=4,
                       input_shape=(5,), init_seed=5)
    params = build_network(spec)
    x = np.random.default_rng(5).normal(size=(2, 5))
    grads = bp_backward(spec, params, forward(spec, params, x), np.array([0, 1]))
    pd, gd = params.as_dict(), grads.as_dict()
    assert set(pd) == set(gd)
    for k in pd:
        assert pd[k].shape == gd[k].shape


def test_stale_trace_rejected():
    spec = NetworkSpec(family="mlp", dense=False, depth=2, hidden_units=3,
                       input_shape=(4,), init_seed=6)
    params = build_network(spec)
    other = build_network(NetworkSpec(family="mlp", dense=False, depth=2,
                                      hidden_units=5, input_shape=(4,), init_seed=6))
    x = np.random.default_rng(6).normal(size=(2, 4))
    trace = forward(spec, params, x)
    with pytest.raises(ValueError, match="stale|shape"):
        bp_backward(spec, other, trace, np.array([0, 1]))
