# %% [markdown]
# # Counting multiply-accumulates
#
# A depthwise separable block costs `1/c_out + 1/k^2` of a standard
# convolution. Swapping its pointwise stage for a sliding-channel layer
# divides the channel-mixing cost by `cg`, whatever the overlap.

# %%
from pathlib import Path

from slidechan import LayerSpec, layer_cost, model_cost, reduction_ratio
from slidechan.network import load_model_spec

std = layer_cost(LayerSpec("Standard", 64, 128, 16, kernel=3))
dsc = layer_cost(LayerSpec("Depthwise", 64, 64, 16, kernel=3)) + layer_cost(LayerSpec("Pointwise", 64, 128, 16))
print("DSC / standard", reduction_ratio(std, dsc), 1 / 128 + 1 / 9)

for co in (0, 8, 16, 31):
    print("SCC co", co, layer_cost(LayerSpec("SCC", 64, 128, 16, cg=2, co=co)))
print("GPW      ", layer_cost(LayerSpec("GroupPointwise", 64, 128, 16, cg=2)))

# %% [markdown]
# The bundled MobileNet-like specs are approximate; only the ratio between
# them is meaningful.

# %%
models = Path(__file__).resolve().parent.parent / "models"
totals = {}
for name in ("mobilenet_like_pw", "mobilenet_like_scc_cg2"):
    spec = load_model_spec(models / f"{name}.json")
    totals[name] = model_cost(spec.layer_specs())
    print(f"{name:24} MACs {totals[name].macs:>12,} params {totals[name].params:>10,}")
print("ratio", reduction_ratio(totals["mobilenet_like_pw"], totals["mobilenet_like_scc_cg2"]))
