import numpy as np

from denselearn.network import NetworkSpec, build_network, forward
from denselearn.rng import RngStream
from denselearn.rules import (bp_backward, build_decoders, build_feedback,
                              dtp_decoder_grads, dtp_forward_grads, dtp_targets,
                              fa_backward)


def test_every_rule_mirrors_parameter_keys_and_shapes():
    for family, input_shape in (("mlp", (5,)), ("conv", (1, 6, 6))):
        spec = NetworkSpec(family=family, dense=True, depth=3,
                           hidden_units=4, channels=3, activation="sigmoid",
                           input_shape=input_shape, init_seed=1)
        params = build_network(spec)
        rng = np.random.default_rng(1)
        x = rng.normal(size=(2,) + spec.input_shape)
        labels = np.array([0, 9])
        trace = forward(spec, params, x)

        grads = {
            "bp": bp_backward(spec, params, trace, labels),
            "fa": fa_backward(spec, params, build_feedback(spec, 2), trace, labels),
        }
        decoders = build_decoders(spec, 3)
        targets = dtp_targets(spec, params, decoders, trace, labels, 0.1)
        grads["dtp"] = dtp_forward_grads(spec, params, trace, targets)

        pd = params.as_dict()
        for rule, g in grads.items():
            gd = g.as_dict()
            assert set(gd) == set(pd), (family, rule)
            for k in pd:
                assert gd[k].shape == pd[k].shape, (family, rule, k)

        dec_grads = dtp_decoder_grads(spec, params, decoders, trace, 0.1, RngStream(4))
        dd, gd = decoders.as_dict(), dec_grads.as_dict()
        assert set(gd) == set(dd), family
        for k in dd:
            assert gd[k].shape == dd[k].shape, (family, k)
