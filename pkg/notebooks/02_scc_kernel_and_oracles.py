# %% [markdown]
# # The direct kernel and its oracles
#
# The forward pass computes each output element from its own window.
# The backward pass lets each input-gradient element pull from the filters
# that cover it, so no two workers write the same place. Both are checked
# here against the two composition implementations, which slice windows out
# and reuse a grouped convolution.

# %%
import numpy as np

from slidechan import SccWeights, scc_backward, scc_config, scc_forward
from slidechan.reference import scc_channel_stack_forward, scc_conv_stack_forward

rng = np.random.default_rng(0)
cfg = scc_config(8, 12, 2, "50%")
x = rng.standard_normal((2, 8, 5, 5))
wts = SccWeights.init(cfg, rng)

out = scc_forward(x, wts, cfg)
for fn in (scc_channel_stack_forward, scc_conv_stack_forward):
    for cc in (False, True):
        ref, stats = fn(x, wts, cfg, cc)
        print(f"{fn.__name__:26} cc={cc!s:5} max gap {np.abs(ref - out).max():.1e}  "
              f"stacked channels {stats.aux_channels_stored}")

# %% [markdown]
# A small worked example: four channels, two groups, half overlap, weights
# set to ones. Each output is the sum of its two-channel window.

# %%
cfg = scc_config(4, 4, 2, "50%", has_bias=False)
x = np.arange(1.0, 5.0).reshape(1, 4, 1, 1)
ones = SccWeights(np.ones((4, 2)), None)
print(scc_forward(x, ones, cfg).ravel())
grads = scc_backward(np.ones((1, 4, 1, 1)), x, ones, cfg)
print(grads.grad_input.ravel())

# %% [markdown]
# Gradients against central differences, on a handful of random layers.

# %%
from slidechan.gradcheck import grad_check_driver

report = grad_check_driver(trials=5, seed=2)
for t in report.trials:
    print(f"{t.operator:13} {t.max_rel_grad_err:.1e}  {t.config}")
