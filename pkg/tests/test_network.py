import json
from pathlib import Path

import numpy as np
import pytest

from slidechan.errors import ConfigError, NumericError, SpecError
from slidechan.gradcheck import numeric_gradient
from slidechan.network import (
    SccLayer,
    build_network,
    load_model_spec,
    parse_model_spec,
    softmax_cross_entropy,
    two_block_spec,
)
from slidechan.train import (
    Dataset,
    TrainConfig,
    load_dataset,
    nearest_template_accuracy,
    save_dataset,
    synth_dataset,
    train,
)

MODELS = Path(__file__).resolve().parent.parent / "models"


def spec_json(layers, classes=3, **extra):
    return json.dumps({"layers": layers, "head": {"pool": "global-average", "classes": classes}, **extra})


def test_single_block_shapes(rng):
    spec = parse_model_spec(spec_json([{"kind": "DscBlock", "c_in": 4, "c_out": 8, "kernel": 3, "cg": 2, "co": "50%"}], 5))
    net = build_network(spec, seed=1)
    logits = net.forward(rng.standard_normal((3, 4, 8, 8)))
    assert logits.shape == (3, 5)


def test_malformed_json_reports_line():
    with pytest.raises(SpecError, match="line 3"):
        parse_model_spec('{\n "layers": [],\n oops\n}')


@pytest.mark.parametrize("doc,exc", [
    (spec_json([{"kind": "SCC", "c_in": 4, "c_out": 8, "cg": 2}, {"kind": "SCC", "c_in": 6, "c_out": 6, "cg": 2}]), SpecError),
    (spec_json([{"kind": "Blob", "c_in": 4, "c_out": 4}]), SpecError),
    (spec_json([{"kind": "SCC", "c_in": 4}]), SpecError),
    (spec_json([{"kind": "SCC", "c_in": 4, "c_out": 4, "cg": 2, "color": 1}]), SpecError),
    (spec_json([{"kind": "SCC", "c_in": 4, "c_out": 4, "cg": 2}], classes=1), SpecError),
    (spec_json([{"kind": "SCC", "c_in": 4, "c_out": 4, "cg": 2}], input={"channels": 3}), SpecError),
    ('[1, 2]', SpecError),
])
def test_spec_errors(doc, exc):
    with pytest.raises(exc):
        parse_model_spec(doc)


def test_bad_group_count_is_config_error():
    spec = parse_model_spec(spec_json([{"kind": "SCC", "c_in": 6, "c_out": 6, "cg": 4}]))
    with pytest.raises(ConfigError):
        build_network(spec)


def test_shipped_specs_parse():
    for path in MODELS.glob("*.json"):
        spec = load_model_spec(path)
        assert spec.layer_specs()
    two = load_model_spec(MODELS / "two_block_scc.json")
    assert two == two_block_spec()


def test_scc_single_group_equals_pointwise_network(rng):
    layers = [{"kind": "Depthwise", "c_in": 6, "c_out": 6, "kernel": 3},
              {"kind": "SCC", "c_in": 6, "c_out": 4, "cg": 1, "co": "25%"},
              {"kind": "Standard", "c_in": 4, "c_out": 4, "kernel": 3}]
    net_scc = build_network(parse_model_spec(spec_json(layers)), seed=3)
    layers[1] = {"kind": "Pointwise", "c_in": 6, "c_out": 4}
    net_pw = build_network(parse_model_spec(spec_json(layers)), seed=3)
    # copy weights across so both networks hold identical parameters
    for a, b in zip(net_scc.modules(), net_pw.modules()):
        for pa, pb in zip(a.params(), b.params()):
            pb[...] = pa.reshape(pb.shape)
    x = rng.standard_normal((2, 6, 5, 5))
    assert np.array_equal(net_scc.forward(x), net_pw.forward(x))


def test_cross_entropy_gradient(rng):
    logits = rng.standard_normal((4, 3))
    labels = np.array([0, 2, 1, 2])
    _, grad = softmax_cross_entropy(logits, labels)
    fd = numeric_gradient(lambda: softmax_cross_entropy(logits, labels)[0], logits, 1e-6)
    np.testing.assert_allclose(grad, fd, atol=1e-8)


def test_network_gradient_matches_finite_differences(rng):
    spec = parse_model_spec(spec_json([
        {"kind": "DscBlock", "c_in": 4, "c_out": 6, "kernel": 3, "stride": 2, "cg": 2, "co": 1, "activation": "none"},
        {"kind": "SCC", "c_in": 6, "c_out": 6, "cg": 3, "co": 1, "activation": "none"},
        {"kind": "GroupPointwise", "c_in": 6, "c_out": 4, "cg": 2, "activation": "none"},
    ]))
    net = build_network(spec, seed=2)
    x = rng.standard_normal((3, 4, 5, 5))
    y = np.array([0, 1, 2])
    net.loss_and_backward(x, y)
    for p, g in net.params_and_grads():
        fd = numeric_gradient(lambda: softmax_cross_entropy(net.forward(x), y)[0], p, 1e-6)
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)


def test_dataset_determinism_and_balance():
    a = synth_dataset(3, 100, 2, 4, 6)
    b = synth_dataset(3, 100, 2, 4, 6)
    assert a.x.tobytes() == b.x.tobytes() and np.array_equal(a.y, b.y)
    assert np.bincount(a.y).tolist() == [50, 50]
    assert nearest_template_accuracy(synth_dataset(7, 512, 4, 4, 8)) == 1.0
    with pytest.raises(ValueError):
        synth_dataset(0, 3, 4, 2, 2)
    with pytest.raises(ValueError):
        synth_dataset(0, 10, 1, 2, 2)


def test_dataset_fixture_round_trip(tmp_path):
    data = synth_dataset(1, 12, 3, 2, 4)
    save_dataset(data, tmp_path)
    back = load_dataset(tmp_path)
    assert back.x.tobytes() == data.x.tobytes() and np.array_equal(back.y, data.y)


def test_zero_learning_rate_keeps_loss(rng):
    data = synth_dataset(0, 40, 4, 4, 8)
    net = build_network(two_block_spec(), seed=0)
    hist = train(net, data, TrainConfig(3, 8, 0.0, 0))
    assert len({loss for _, loss, _ in hist}) == 1
    assert [e for e, _, _ in hist] == [0, 1, 2, 3]


def test_single_sample_overfit_monotone():
    data = synth_dataset(4, 4, 4, 4, 8)
    one = Dataset(data.x[:1], data.y[:1])
    net = build_network(two_block_spec(), seed=4)
    hist = train(net, one, TrainConfig(10, 1, 0.01, 0))
    losses = [loss for _, loss, _ in hist]
    assert all(b <= a for a, b in zip(losses, losses[1:]))


def test_training_is_deterministic():
    data = synth_dataset(2, 64, 4, 4, 8)
    runs = [train(build_network(two_block_spec(), seed=9), data, TrainConfig(2, 16, 0.05, 9)) for _ in range(2)]
    assert runs[0] == runs[1]


@pytest.mark.parametrize("path", sorted(MODELS.glob("two_block*.json")))
def test_first_epoch_lowers_loss(path):
    spec = load_model_spec(path)
    data = synth_dataset(0, 128, spec.classes, spec.input_channels, spec.input_spatial)
    hist = train(build_network(spec, seed=0), data, TrainConfig(1, 16, 0.01, 0))
    assert hist[1][1] < hist[0][1]


def test_first_epoch_lowers_loss_mixed_kinds():
    spec = parse_model_spec(spec_json([
        {"kind": "Standard", "c_in": 3, "c_out": 8, "kernel": 3},
        {"kind": "DscBlock", "c_in": 8, "c_out": 8, "kernel": 3, "stride": 2, "cg": 4, "co": 1},
        {"kind": "GroupPointwise", "c_in": 8, "c_out": 8, "cg": 2},
        {"kind": "Pointwise", "c_in": 8, "c_out": 8},
    ], 3))
    data = synth_dataset(0, 96, 3, 3, 8)
    hist = train(build_network(spec, seed=0), data, TrainConfig(1, 16, 0.01, 0))
    assert hist[1][1] < hist[0][1]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_raises():
    data = synth_dataset(0, 16, 4, 4, 8)
    net = build_network(two_block_spec(), seed=0)
    layer = next(m for m in net.layers if isinstance(m, SccLayer))
    layer.weights.weight[:] = np.inf
    with pytest.raises(NumericError, match="step 0"):
        train(net, data, TrainConfig(1, 8, 0.1, 0))
