# %% [markdown]
# # Training a two-block network
#
# Each block is a 3x3 depthwise conv followed by a sliding-channel layer
# (cg=2, half overlap) and a ReLU. A pooled dense head gives four logits.
# The data are noisy copies of four channel templates.

# %%
from slidechan.network import build_network, two_block_spec
from slidechan.train import TrainConfig, nearest_template_accuracy, synth_dataset, train

data = synth_dataset(seed=7, samples=512, classes=4, c=4, hw=8)
print("nearest-template accuracy", nearest_template_accuracy(data))

net = build_network(two_block_spec(), seed=7)
history = train(net, data, TrainConfig(epochs=30, batch_size=32, learning_rate=0.05, seed=7),
                log=lambda e, loss, acc: print(f"epoch {e:2}  loss {loss:.4f}  acc {acc:.3f}"))

# %% [markdown]
# Same seed, same history: the kernels fix their summation order, so
# reruns agree bit for bit.

# %%
again = train(build_network(two_block_spec(), seed=7), data, TrainConfig(epochs=30, seed=7))
print("identical rerun:", again == history)
