import numpy as np
import pytest

from slidechan.cost import CostReport, LayerSpec, layer_cost, model_cost, reduction_ratio
from slidechan.cycle import scc_config
from slidechan.errors import ConfigError
from slidechan.reference import ConvSpec, ConvWeights, grouped_conv_forward_counted
from slidechan.scc import SccWeights, scc_forward_counted


def dsc(c_in, c_out, w, f, **kw):
    return [LayerSpec("Depthwise", c_in, c_in, f, w, **kw), LayerSpec("Pointwise", c_in, c_out, f, **kw)]


def test_standard_vs_dsc_numbers():
    std = layer_cost(LayerSpec("Standard", 64, 64, 8, 3))
    assert (std.params, std.macs) == (36864, 2359296)
    d = model_cost(dsc(64, 64, 3, 8))
    assert (d.params, d.macs) == (4672, 299008)
    fr, pr = reduction_ratio(std, d)
    assert fr == pytest.approx(1 / 64 + 1 / 9, abs=1e-15) and pr == pytest.approx(1 / 64 + 1 / 9, abs=1e-15)
    assert std.flops == 2 * std.macs


@pytest.mark.parametrize("cg", [1, 2, 4, 8])
def test_scc_cost_matches_gpw_for_every_overlap(cg):
    gpw = layer_cost(LayerSpec("GroupPointwise", 64, 64, 16, cg=cg))
    gw = 64 // cg
    for overlap in range(gw):
        assert layer_cost(LayerSpec("SCC", 64, 64, 16, cg=cg, co=overlap)) == gpw


def test_pointwise_is_scc_with_one_group():
    assert layer_cost(LayerSpec("Pointwise", 24, 40, 7)) == layer_cost(LayerSpec("SCC", 24, 40, 7, cg=1, co=0.5))


def test_model_cost_sums():
    one = LayerSpec("Standard", 3, 8, 10, 3)
    assert model_cost([one]) == layer_cost(one)
    assert model_cost([one, one]) == CostReport(2 * layer_cost(one).macs, 2 * layer_cost(one).params)
    with pytest.raises(ValueError):
        model_cost([])


def test_scc_block_halves_pointwise_stage():
    pw = layer_cost(LayerSpec("Pointwise", 256, 256, 8))
    scc = layer_cost(LayerSpec("SCC", 256, 256, 8, cg=2, co=0.5))
    assert reduction_ratio(pw, scc) == (0.5, 0.5)
    dw_pw = layer_cost(LayerSpec("DscBlock", 256, 256, 8, 3, cg=1))
    dw_scc = layer_cost(LayerSpec("DscBlock", 256, 256, 8, 3, cg=2, co=0.5))
    assert dw_scc.macs < dw_pw.macs


def test_ratio_edge_cases():
    r = CostReport(10, 20)
    assert reduction_ratio(r, r) == (1.0, 1.0)
    with pytest.raises(ZeroDivisionError):
        reduction_ratio(CostReport(0, 1), r)


def test_bias_counting():
    assert layer_cost(LayerSpec("Depthwise", 8, 8, 4, 3, count_bias=True)).params == 72 + 8
    assert layer_cost(LayerSpec("SCC", 8, 16, 4, cg=2, co=1, count_bias=True)).params == 64 + 16
    block = layer_cost(LayerSpec("DscBlock", 8, 16, 4, 3, cg=2, co=1, count_bias=True))
    assert block.params == 72 + 8 + 64 + 16


@pytest.mark.parametrize("spec", [
    dict(kind="Depthwise", c_in=4, c_out=6, spatial=4, kernel=3),
    dict(kind="Pointwise", c_in=4, c_out=6, spatial=4, kernel=3),
    dict(kind="GroupPointwise", c_in=4, c_out=6, spatial=4, cg=4),
    dict(kind="SCC", c_in=6, c_out=6, spatial=4, cg=4),
    dict(kind="Conv", c_in=4, c_out=6, spatial=4),
])
def test_invalid_specs(spec):
    with pytest.raises(ConfigError):
        LayerSpec(**spec)


def counted_macs(spec: LayerSpec, rng) -> int:
    """Run the matching reference forward on one sample and count its multiplies."""
    x = rng.standard_normal((1, spec.c_in, spec.spatial, spec.spatial))
    pad = spec.kernel // 2
    if spec.kind == "Standard":
        conv = ConvSpec(spec.c_in, spec.c_out, spec.kernel, spec.stride, pad)
    elif spec.kind == "Depthwise":
        conv = ConvSpec(spec.c_in, spec.c_in, spec.kernel, spec.stride, pad, groups=spec.c_in)
    elif spec.kind == "Pointwise":
        conv = ConvSpec(spec.c_in, spec.c_out, stride=spec.stride)
    elif spec.kind == "GroupPointwise":
        conv = ConvSpec(spec.c_in, spec.c_out, stride=spec.stride, groups=spec.cg)
    else:
        cfg = scc_config(spec.c_in, spec.c_out, spec.cg, spec.co)
        return scc_forward_counted(x, SccWeights.init(cfg, rng), cfg)[1]
    return grouped_conv_forward_counted(x, ConvWeights.init(conv, rng), conv)[1]


def random_layer_specs(rng, count):
    kinds = ["Standard", "Depthwise", "Pointwise", "GroupPointwise", "SCC"]
    specs = []
    while len(specs) < count:
        kind = kinds[len(specs) % len(kinds)]
        cg = int(rng.choice([1, 2, 4]))
        c_in = cg * int(rng.integers(1, 5))
        c_out = c_in if kind == "Depthwise" else cg * int(rng.integers(1, 5))
        kernel = int(rng.choice([1, 3, 5])) if kind in ("Standard", "Depthwise") else 1
        stride = int(rng.choice([1, 2])) if kind != "SCC" else 1
        spatial = int(rng.integers(max(kernel // 2, 1), 9))
        co = int(rng.integers(0, c_in // cg)) if kind == "SCC" and c_in // cg > 1 else 0
        specs.append(LayerSpec(kind, c_in, c_out, spatial, kernel, stride, cg, co))
    return specs


def test_formula_equals_instrumented_count(rng):
    for spec in random_layer_specs(rng, 15):
        assert layer_cost(spec).macs == counted_macs(spec, rng), spec


def test_dsc_ratio_identity_sweep():
    for w in (1, 3, 5, 7):
        for c_in in (3, 16, 64):
            for c_out in (8, 64, 256):
                base = layer_cost(LayerSpec("Standard", c_in, c_out, 8, w))
                var = model_cost(dsc(c_in, c_out, w, 8))
                fr, pr = reduction_ratio(base, var)
                assert abs(fr - (1 / c_out + 1 / w**2)) <= 1e-15
                assert abs(pr - (1 / c_out + 1 / w**2)) <= 1e-15
