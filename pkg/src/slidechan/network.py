"""Model specification files and a small layer stack with hand-written backward passes.

A model spec is a JSON document::

    {
      "input": {"channels": 4, "spatial": 8},
      "layers": [
        {"kind": "DscBlock", "c_in": 4, "c_out": 8, "kernel": 3, "stride": 1,
         "cg": 2, "co": "50%", "activation": "relu"}
      ],
      "head": {"pool": "global-average", "classes": 4}
    }

``kind`` is one of Standard, Depthwise, Pointwise, GroupPointwise, SCC, DscBlock.
``activation`` is "relu" (the default) or "none".
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .cost import KINDS, LayerSpec
from .cycle import SccConfig, scc_config
from .errors import ConfigError, ShapeError, SpecError
from .reference import ConvSpec, ConvWeights, grouped_conv_backward, grouped_conv_forward
from .scc import SccWeights, scc_backward_input, scc_backward_params, scc_forward


@dataclass(frozen=True)
class LayerRecord:
    kind: str
    c_in: int
    c_out: int
    kernel: int = 1
    stride: int = 1
    cg: int = 1
    co: object = 0
    activation: str = "relu"


@dataclass(frozen=True)
class ModelSpec:
    layers: tuple[LayerRecord, ...]
    classes: int
    input_channels: int | None = None
    input_spatial: int | None = None
    pool: str = "global-average"

    def layer_specs(self, spatial: int | None = None, count_bias: bool = False) -> list[LayerSpec]:
        """Cost-model view of the layers, propagating the spatial size through strides."""
        size = spatial if spatial is not None else self.input_spatial
        if size is None:
            raise SpecError("model spec has no input.spatial; pass spatial explicitly")
        specs = []
        for rec in self.layers:
            kernel = rec.kernel if rec.kind in ("Standard", "Depthwise", "DscBlock") else 1
            spec = LayerSpec(rec.kind, rec.c_in, rec.c_out, size, kernel, rec.stride,
                             rec.cg, rec.co, count_bias)
            specs.append(spec)
            size = spec.out_spatial
        return specs


_LAYER_KEYS = {"kind", "c_in", "c_out", "kernel", "stride", "cg", "co", "activation"}


def parse_model_spec(text: str, source: str = "<spec>") -> ModelSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SpecError(f"{source}: top level must be a JSON object")
    raw_layers = doc.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise SpecError(f"{source}: 'layers' must be a non-empty list")
    head = doc.get("head")
    if not isinstance(head, dict) or "classes" not in head:
        raise SpecError(f"{source}: 'head' must be an object with 'classes'")
    pool = head.get("pool", "global-average")
    if pool != "global-average":
        raise SpecError(f"{source}: unsupported pool {pool!r}")
    classes = int(head["classes"])
    if classes < 2:
        raise SpecError(f"{source}: need at least 2 classes, got {classes}")

    layers = []
    for i, raw in enumerate(raw_layers):
        if not isinstance(raw, dict):
            raise SpecError(f"{source}: layer {i} is not an object")
        unknown = set(raw) - _LAYER_KEYS
        if unknown:
            raise SpecError(f"{source}: layer {i} has unknown keys {sorted(unknown)}")
        try:
            rec = LayerRecord(
                kind=raw["kind"],
                c_in=int(raw["c_in"]),
                c_out=int(raw["c_out"]),
                kernel=int(raw.get("kernel", 1)),
                stride=int(raw.get("stride", 1)),
                cg=int(raw.get("cg", 1)),
                co=raw.get("co", 0),
                activation=raw.get("activation", "relu"),
            )
        except KeyError as exc:
            raise SpecError(f"{source}: layer {i} is missing {exc.args[0]!r}") from None
        if rec.kind not in KINDS:
            raise SpecError(f"{source}: layer {i} has unknown kind {rec.kind!r}")
        if rec.activation not in ("relu", "none"):
            raise SpecError(f"{source}: layer {i} has unknown activation {rec.activation!r}")
        if layers and layers[-1].c_out != rec.c_in:
            raise SpecError(
                f"{source}: layer {i} expects {rec.c_in} input channels "
                f"but layer {i - 1} produces {layers[-1].c_out}"
            )
        layers.append(rec)

    inp = doc.get("input", {})
    in_c = inp.get("channels")
    if in_c is not None and int(in_c) != layers[0].c_in:
        raise SpecError(f"{source}: input has {in_c} channels but layer 0 expects {layers[0].c_in}")
    spatial = inp.get("spatial")
    return ModelSpec(tuple(layers), classes,
                     None if in_c is None else int(in_c),
                     None if spatial is None else int(spatial))


def load_model_spec(path: str | os.PathLike) -> ModelSpec:
    with open(path) as fh:
        return parse_model_spec(fh.read(), source=str(path))


# -- layers -------------------------------------------------------------------

class ConvLayer:
    def __init__(self, spec: ConvSpec, weights: ConvWeights):
        weights.check(spec)
        self.spec = spec
        self.weights = weights
        self._x = None

    def forward(self, x):
        self._x = x
        return grouped_conv_forward(x, self.weights, self.spec)

    def backward(self, grad):
        g_in, g_w, g_b = grouped_conv_backward(grad, self._x, self.weights, self.spec)
        self.grads = [g_w] if g_b is None else [g_w, g_b]
        return g_in

    def params(self):
        w = self.weights
        return [w.weight] if w.bias is None else [w.weight, w.bias]


class SccLayer:
    def __init__(self, cfg: SccConfig, weights: SccWeights):
        weights.check(cfg)
        self.cfg = cfg
        self.weights = weights
        self._x = None

    def forward(self, x):
        self._x = x
        return scc_forward(x, self.weights, self.cfg)

    def backward(self, grad):
        g_w, g_b = scc_backward_params(grad, self._x, self.cfg)
        self.grads = [g_w] if g_b is None else [g_w, g_b]
        return scc_backward_input(grad, self.weights, self.cfg)

    def params(self):
        w = self.weights
        return [w.weight] if w.bias is None else [w.weight, w.bias]


class ReLU:
    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad):
        return np.where(self._mask, grad, 0.0)

    def params(self):
        return []


class DenseHead:
    """Global average pool followed by an affine map to class logits."""

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        self.weight = weight
        self.bias = bias

    def forward(self, x):
        self._shape = x.shape
        self._pooled = x.mean(axis=(2, 3))
        return self._pooled @ self.weight.T + self.bias

    def backward(self, grad):
        self.grads = [grad.T @ self._pooled, grad.sum(axis=0)]
        g_pooled = grad @ self.weight
        n, c, h, w = self._shape
        return np.broadcast_to((g_pooled / (h * w))[:, :, None, None], self._shape).copy()

    def params(self):
        return [self.weight, self.bias]


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch and its gradient with respect to the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    n = logits.shape[0]
    loss = -logp[np.arange(n), labels].mean()
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n


@dataclass
class Network:
    layers: list
    head: DenseHead
    classes: int
    spec: ModelSpec | None = field(default=None, repr=False)

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return self.head.forward(x)

    def features(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def loss_and_backward(self, x, labels):
        logits = self.forward(x)
        loss, grad = softmax_cross_entropy(logits, labels)
        g = self.head.backward(grad)
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return loss, logits

    def modules(self):
        return [*self.layers, self.head]

    def params_and_grads(self):
        pairs = []
        for m in self.modules():
            pairs.extend(zip(m.params(), getattr(m, "grads", [])))
        return pairs


def _conv_for(rec: LayerRecord, rng) -> list:
    kind = rec.kind
    if kind == "Standard":
        spec = ConvSpec(rec.c_in, rec.c_out, rec.kernel, rec.stride, rec.kernel // 2)
    elif kind == "Depthwise":
        if rec.c_out != rec.c_in:
            raise SpecError(f"depthwise layer needs c_out == c_in, got {rec.c_in} -> {rec.c_out}")
        spec = ConvSpec(rec.c_in, rec.c_in, rec.kernel, rec.stride, rec.kernel // 2, groups=rec.c_in)
    elif kind == "Pointwise":
        spec = ConvSpec(rec.c_in, rec.c_out, stride=rec.stride)
    else:
        spec = ConvSpec(rec.c_in, rec.c_out, stride=rec.stride, groups=rec.cg)
    return [ConvLayer(spec, ConvWeights.init(spec, rng))]


def build_network(spec: ModelSpec, seed: int = 0) -> Network:
    """Instantiate layers with seeded random weights.

    A DscBlock becomes a depthwise conv (padding kernel // 2) followed by an SCC
    layer; stride belongs to the depthwise stage. An SCC layer record is 1x1 and
    stride 1.
    """
    rng = np.random.default_rng(seed)
    layers: list = []
    for rec in spec.layers:
        if rec.kind in ("SCC", "DscBlock"):
            cfg = scc_config(rec.c_in, rec.c_out, rec.cg, rec.co)
            if rec.kind == "DscBlock":
                dw = ConvSpec(rec.c_in, rec.c_in, rec.kernel, rec.stride, rec.kernel // 2, groups=rec.c_in)
                layers.append(ConvLayer(dw, ConvWeights.init(dw, rng)))
            elif rec.stride != 1:
                raise ConfigError("SCC layers have stride 1; put striding in a depthwise stage")
            layers.append(SccLayer(cfg, SccWeights.init(cfg, rng)))
        else:
            layers.extend(_conv_for(rec, rng))
        if rec.activation == "relu":
            layers.append(ReLU())
    width = spec.layers[-1].c_out
    bound = np.sqrt(1.0 / width)
    head = DenseHead(rng.uniform(-bound, bound, (spec.classes, width)),
                     rng.uniform(-bound, bound, spec.classes))
    return Network(layers, head, spec.classes, spec)


def two_block_spec(c_in: int = 4, width: int = 8, classes: int = 4, spatial: int = 8,
                   cg: int = 2, co="50%") -> ModelSpec:
    """Two depthwise + sliding-channel blocks with a pooled dense head."""
    return ModelSpec(
        (
            LayerRecord("DscBlock", c_in, width, kernel=3, cg=cg, co=co),
            LayerRecord("DscBlock", width, width, kernel=3, cg=cg, co=co),
        ),
        classes,
        c_in,
        spatial,
    )


def check_input(net: Network, x: np.ndarray) -> None:
    first = net.layers[0]
    expected = first.cfg.c_in if isinstance(first, SccLayer) else first.spec.c_in
    if x.shape[1] != expected:
        raise ShapeError(f"network expects {expected} input channels, got {x.shape[1]}")
