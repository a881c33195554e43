# %% [markdown]
# # Direct kernel versus compositions
#
# The compositions materialize one window per filter (or one per distinct
# window with the cyclic optimization). The direct kernel reads the input in
# place. Timings are mean wall-clock milliseconds on this machine.

# %%
import io

from slidechan.bench import bench, parse_sweep, write_csv

rows = bench(parse_sweep("cg=2,4;co=50;cin=64;cout=64;spatial=16;batch=8"), repeats=3)
buf = io.StringIO()
write_csv(rows, buf)
print(buf.getvalue())

# %%
for r in rows:
    if r.phase == "forward":
        back = next(b for b in rows if b.phase == "backward" and b.implementation == r.implementation and b.cg == r.cg)
        print(f"cg={r.cg} {r.implementation:17} fwd+bwd {r.wall_ms + back.wall_ms:8.2f} ms  aux {r.aux_channels}")
