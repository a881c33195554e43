# %% [markdown]
# # Channel windows and the cyclic distance
#
# A sliding-channel layer gives every output filter a contiguous window of
# `c_in / cg` input channels. Consecutive windows move forward by
# `shift = group_width - overlap` and wrap around the channel ring, so after a
# while the windows start repeating. The number of distinct windows is the
# cyclic distance.

# %%
import math

from slidechan import compute_channel_cycle, scc_config, window_of

cfg = scc_config(c_in=4, c_out=4, cg=2, co="50%")
cycle = compute_channel_cycle(cfg)
print(cfg)
for r, w in enumerate(cycle.windows):
    print(r, w)
print("cyclic_dist", cycle.cyclic_dist)

# %% [markdown]
# Six channels with a third of each window shared: the shift is 2, so the
# third window lands back where the first one started.

# %%
cfg = scc_config(6, 6, 2, "33%")
cycle = compute_channel_cycle(cfg)
print([str(w) for w in cycle.windows], "->", cycle.cyclic_dist)

# %% [markdown]
# In general the cycle length is `c_in / gcd(shift, c_in)`, capped at
# `c_out`. Filters beyond the cycle reuse an earlier window.

# %%
for c_in, cg, overlap in [(8, 2, 1), (8, 2, 2), (12, 3, 1), (16, 4, 2)]:
    cfg = scc_config(c_in, 32, cg, overlap)
    d = compute_channel_cycle(cfg).cyclic_dist
    print(f"c_in={c_in:2} cg={cg} shift={cfg.shift} cyclic_dist={d:2} law={c_in // math.gcd(cfg.shift, c_in)}")

cycle = compute_channel_cycle(scc_config(8, 32, 2, 2))
print("filter 13 reads", window_of(cycle, 13))
