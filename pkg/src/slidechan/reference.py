"""Reference convolutions and the two operator-composition forms of the sliding-channel layer.

``grouped_conv_forward`` covers standard, depthwise, pointwise and group-pointwise
convolution with one direct loop nest. The channel-stack and conv-stack functions
rebuild the sliding-channel layer from slicing, concatenation and grouped
convolution. They are deliberately wasteful: they serve as oracles for the
direct kernel and as baselines for the benchmark.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .cycle import SccConfig, compute_channel_cycle, filter_starts
from .errors import ConfigError, ShapeError
from .scc import SccGradients, SccWeights
from .tensor import as_tensor4, concat_channels, slice_channels_cyclic


@dataclass(frozen=True)
class ConvSpec:
    c_in: int
    c_out: int
    kernel: int = 1
    stride: int = 1
    padding: int = 0
    groups: int = 1

    def __post_init__(self):
        if self.c_in < 1 or self.c_out < 1:
            raise ConfigError(f"channel counts must be >= 1, got {self.c_in}, {self.c_out}")
        if self.groups < 1 or self.c_in % self.groups or self.c_out % self.groups:
            raise ConfigError(
                f"groups={self.groups} must divide c_in={self.c_in} and c_out={self.c_out}"
            )
        if self.kernel < 1 or self.stride < 1 or self.padding < 0:
            raise ConfigError(
                f"bad geometry kernel={self.kernel} stride={self.stride} padding={self.padding}"
            )

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        return (self.c_out, self.c_in // self.groups, self.kernel, self.kernel)

    def out_size(self, size: int) -> int:
        span = size + 2 * self.padding - self.kernel
        if span < 0:
            raise ShapeError(f"kernel {self.kernel} larger than padded input {size + 2 * self.padding}")
        return span // self.stride + 1


@dataclass
class ConvWeights:
    weight: np.ndarray
    bias: np.ndarray | None = None

    @classmethod
    def init(cls, spec: ConvSpec, rng: np.random.Generator, bias: bool = True) -> "ConvWeights":
        fan_in = (spec.c_in // spec.groups) * spec.kernel**2
        bound = np.sqrt(1.0 / fan_in)
        weight = rng.uniform(-bound, bound, size=spec.weight_shape)
        return cls(weight, rng.uniform(-bound, bound, size=spec.c_out) if bias else None)

    def check(self, spec: ConvSpec) -> None:
        if self.weight.shape != spec.weight_shape:
            raise ShapeError(f"weight shape {self.weight.shape} != {spec.weight_shape}")
        if self.bias is not None and self.bias.shape != (spec.c_out,):
            raise ShapeError(f"bias shape {self.bias.shape} != ({spec.c_out},)")


@dataclass(frozen=True)
class CompositionStats:
    aux_channels_stored: int
    aux_bytes: int


@njit(parallel=True, cache=True)
def _conv_forward_kernel(xp, weight, bias, stride, groups, out):
    n = xp.shape[0]
    c_out, cpg_in, kh, kw = weight.shape
    ho, wo = out.shape[2], out.shape[3]
    cpg_out = c_out // groups
    for job in prange(n * c_out):
        b = job // c_out
        oc = job % c_out
        base = (oc // cpg_out) * cpg_in
        for oy in range(ho):
            for ox in range(wo):
                acc = 0.0
                for a in range(cpg_in):
                    for ki in range(kh):
                        for kj in range(kw):
                            acc += weight[oc, a, ki, kj] * xp[b, base + a, oy * stride + ki, ox * stride + kj]
                out[b, oc, oy, ox] = acc + bias[oc]


@njit(cache=True)
def _conv_forward_counted_kernel(xp, weight, bias, stride, groups, out):
    n = xp.shape[0]
    c_out, cpg_in, kh, kw = weight.shape
    ho, wo = out.shape[2], out.shape[3]
    cpg_out = c_out // groups
    count = 0
    for b in range(n):
        for oc in range(c_out):
            base = (oc // cpg_out) * cpg_in
            for oy in range(ho):
                for ox in range(wo):
                    acc = 0.0
                    for a in range(cpg_in):
                        for ki in range(kh):
                            for kj in range(kw):
                                acc += weight[oc, a, ki, kj] * xp[b, base + a, oy * stride + ki, ox * stride + kj]
                                count += 1
                    out[b, oc, oy, ox] = acc + bias[oc]
    return count


@njit(parallel=True, cache=True)
def _conv_backward_input_kernel(grad_out, weight, stride, groups, gxp):
    # one worker per padded-input element, pulling from every output tap that read it
    n, c_in, hp, wp = gxp.shape
    c_out, cpg_in, kh, kw = weight.shape
    ho, wo = grad_out.shape[2], grad_out.shape[3]
    cpg_out = c_out // groups
    for job in prange(n * c_in):
        b = job // c_in
        ic = job % c_in
        g = ic // cpg_in
        a = ic % cpg_in
        for py in range(hp):
            for px in range(wp):
                acc = 0.0
                for oc in range(g * cpg_out, (g + 1) * cpg_out):
                    for ki in range(kh):
                        ry = py - ki
                        if ry < 0 or ry % stride:
                            continue
                        oy = ry // stride
                        if oy >= ho:
                            continue
                        for kj in range(kw):
                            rx = px - kj
                            if rx < 0 or rx % stride:
                                continue
                            ox = rx // stride
                            if ox >= wo:
                                continue
                            acc += weight[oc, a, ki, kj] * grad_out[b, oc, oy, ox]
                gxp[b, ic, py, px] = acc


@njit(parallel=True, cache=True)
def _conv_backward_params_kernel(grad_out, xp, stride, groups, grad_w, grad_b):
    n = xp.shape[0]
    c_out, cpg_in, kh, kw = grad_w.shape
    ho, wo = grad_out.shape[2], grad_out.shape[3]
    cpg_out = c_out // groups
    for oc in prange(c_out):
        base = (oc // cpg_out) * cpg_in
        for a in range(cpg_in):
            for ki in range(kh):
                for kj in range(kw):
                    acc = 0.0
                    for b in range(n):
                        for oy in range(ho):
                            for ox in range(wo):
                                acc += grad_out[b, oc, oy, ox] * xp[b, base + a, oy * stride + ki, ox * stride + kj]
                    grad_w[oc, a, ki, kj] = acc
        acc = 0.0
        for b in range(n):
            for oy in range(ho):
                for ox in range(wo):
                    acc += grad_out[b, oc, oy, ox]
        grad_b[oc] = acc


def _prepare(x, wts: ConvWeights, spec: ConvSpec):
    x = as_tensor4(x)
    if x.shape[1] != spec.c_in:
        raise ShapeError(f"input has {x.shape[1]} channels, spec expects {spec.c_in}")
    wts.check(spec)
    p = spec.padding
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
    out = np.empty((x.shape[0], spec.c_out, spec.out_size(x.shape[2]), spec.out_size(x.shape[3])))
    bias = np.zeros(spec.c_out) if wts.bias is None else np.ascontiguousarray(wts.bias, dtype=np.float64)
    return np.ascontiguousarray(xp), np.ascontiguousarray(wts.weight, dtype=np.float64), bias, out


def grouped_conv_forward(x, wts: ConvWeights, spec: ConvSpec) -> np.ndarray:
    xp, weight, bias, out = _prepare(x, wts, spec)
    _conv_forward_kernel(xp, weight, bias, spec.stride, spec.groups, out)
    return out


def grouped_conv_forward_counted(x, wts: ConvWeights, spec: ConvSpec):
    """Sequential forward that also returns the number of multiplies executed, padding taps included."""
    xp, weight, bias, out = _prepare(x, wts, spec)
    count = _conv_forward_counted_kernel(xp, weight, bias, spec.stride, spec.groups, out)
    return out, int(count)


def grouped_conv_backward(grad_out, x, wts: ConvWeights, spec: ConvSpec):
    """Return ``(grad_input, grad_weight, grad_bias)``; ``grad_bias`` is None when there is no bias."""
    x = as_tensor4(x)
    grad_out = as_tensor4(grad_out)
    wts.check(spec)
    if x.shape[1] != spec.c_in:
        raise ShapeError(f"input has {x.shape[1]} channels, spec expects {spec.c_in}")
    expected = (x.shape[0], spec.c_out, spec.out_size(x.shape[2]), spec.out_size(x.shape[3]))
    if grad_out.shape != expected:
        raise ShapeError(f"grad_out shape {grad_out.shape} != {expected}")
    p = spec.padding
    xp = np.ascontiguousarray(np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))) if p else x
    weight = np.ascontiguousarray(wts.weight, dtype=np.float64)
    gxp = np.empty(xp.shape)
    _conv_backward_input_kernel(grad_out, weight, spec.stride, spec.groups, gxp)
    grad_w = np.empty(spec.weight_shape)
    grad_b = np.empty(spec.c_out)
    _conv_backward_params_kernel(grad_out, xp, spec.stride, spec.groups, grad_w, grad_b)
    grad_in = np.ascontiguousarray(gxp[:, :, p:p + x.shape[2], p:p + x.shape[3]]) if p else gxp
    return grad_in, grad_w, (grad_b if wts.bias is not None else None)


# -- pointwise / group-pointwise views of a sliding-channel layer -------------

def pointwise_equivalent(cfg: SccConfig, wts: SccWeights):
    """Pointwise conv computing the same map as an SCC layer with ``cg == 1``."""
    if cfg.cg != 1:
        raise ConfigError(f"pointwise equivalence needs cg=1, got cg={cfg.cg}")
    spec = ConvSpec(cfg.c_in, cfg.c_out)
    return spec, ConvWeights(wts.weight.reshape(spec.weight_shape).copy(), _copy(wts.bias))


def group_pointwise_equivalent(cfg: SccConfig, wts: SccWeights):
    """Group-pointwise conv equal to a zero-overlap SCC layer up to an output permutation.

    With no overlap, filter ``oc`` reads channel group ``oc % cg``, whereas the
    grouped conv assigns contiguous output blocks to groups. Returns
    ``(spec, weights, perm)`` with ``scc_out[:, oc] == gpw_out[:, perm[oc]]``.
    """
    if cfg.overlap_channels != 0 and cfg.cg != 1:
        raise ConfigError("group-pointwise equivalence needs zero overlap")
    if cfg.c_out % cfg.cg:
        raise ConfigError(f"c_out={cfg.c_out} is not divisible by cg={cfg.cg}")
    per_group = cfg.c_out // cfg.cg
    oc = np.arange(cfg.c_out)
    perm = (oc % cfg.cg) * per_group + oc // cfg.cg
    spec = ConvSpec(cfg.c_in, cfg.c_out, groups=cfg.cg)
    weight = np.empty(spec.weight_shape)
    weight[perm, :, 0, 0] = wts.weight
    bias = None
    if wts.bias is not None:
        bias = np.empty(cfg.c_out)
        bias[perm] = wts.bias
    return spec, ConvWeights(weight, bias), perm


def _copy(a):
    return None if a is None else a.copy()


# -- composition oracles ------------------------------------------------------

def _stats(channels: int, x: np.ndarray) -> CompositionStats:
    n, _, h, w = x.shape
    return CompositionStats(channels, channels * n * h * w * 8)


def _filter_windows(cfg: SccConfig):
    cycle = compute_channel_cycle(cfg)
    return cycle, filter_starts(cfg, cycle)


def _stacked_spec(cfg: SccConfig) -> ConvSpec:
    return ConvSpec(cfg.c_out * cfg.group_width, cfg.c_out, groups=cfg.c_out)


def _stacked_weights(cfg: SccConfig, wts: SccWeights) -> ConvWeights:
    return ConvWeights(wts.weight.reshape(cfg.c_out, cfg.group_width, 1, 1), wts.bias)


def _channel_stack(x, cfg: SccConfig, use_cc: bool):
    cycle, starts = _filter_windows(cfg)
    gw = cfg.group_width
    if not use_cc:
        stacked = concat_channels([slice_channels_cyclic(x, int(s), gw) for s in starts])
        return stacked, cfg.c_out * gw
    first = concat_channels([slice_channels_cyclic(x, w.start, gw) for w in cycle.windows])
    reps = -(-cfg.c_out // cycle.cyclic_dist)
    stacked = concat_channels([first] * reps)[:, : cfg.c_out * gw]
    return np.ascontiguousarray(stacked), cycle.cyclic_dist * gw


def scc_channel_stack_forward(x, wts: SccWeights, cfg: SccConfig, use_cc: bool = False):
    """Slice every filter's window, concatenate, then run a grouped 1x1 conv with c_out groups."""
    x = as_tensor4(x)
    if x.shape[1] != cfg.c_in:
        raise ShapeError(f"input has {x.shape[1]} channels, config expects {cfg.c_in}")
    wts.check(cfg)
    stacked, stored = _channel_stack(x, cfg, use_cc)
    out = grouped_conv_forward(stacked, _stacked_weights(cfg, wts), _stacked_spec(cfg))
    return out, _stats(stored, x)


def scc_channel_stack_backward(grad_out, x, wts: SccWeights, cfg: SccConfig, use_cc: bool = False):
    x = as_tensor4(x)
    wts.check(cfg)
    stacked, _ = _channel_stack(x, cfg, use_cc)
    g_stacked, g_w, g_b = grouped_conv_backward(
        grad_out, stacked, _stacked_weights(cfg, wts), _stacked_spec(cfg)
    )
    cycle, starts = _filter_windows(cfg)
    gw = cfg.group_width
    grad_in = np.zeros_like(x)
    if use_cc:
        # fold the replicated cycles back onto the first one, then scatter its windows
        d = cycle.cyclic_dist
        first = np.zeros((x.shape[0], d * gw, x.shape[2], x.shape[3]))
        for oc in range(cfg.c_out):
            r = oc % d
            first[:, r * gw:(r + 1) * gw] += g_stacked[:, oc * gw:(oc + 1) * gw]
        for r, win in enumerate(cycle.windows):
            _scatter_window(grad_in, first[:, r * gw:(r + 1) * gw], win.start)
    else:
        for oc, s in enumerate(starts):
            _scatter_window(grad_in, g_stacked[:, oc * gw:(oc + 1) * gw], int(s))
    return SccGradients(grad_in, g_w.reshape(cfg.weight_shape), g_b)


def _scatter_window(grad_in, part, start):
    c = grad_in.shape[1]
    for k in range(part.shape[1]):
        grad_in[:, (start + k) % c] += part[:, k]


def _conv_stack_slices(x, cfg: SccConfig, use_cc: bool):
    cycle, starts = _filter_windows(cfg)
    gw = cfg.group_width
    if use_cc:
        stored = [slice_channels_cyclic(x, w.start, gw) for w in cycle.windows]
        return [stored[oc % cycle.cyclic_dist] for oc in range(cfg.c_out)], len(stored) * gw
    return [slice_channels_cyclic(x, int(s), gw) for s in starts], cfg.c_out * gw


def scc_conv_stack_forward(x, wts: SccWeights, cfg: SccConfig, use_cc: bool = False):
    """Convolve each filter's window with a single-output 1x1 conv, then concatenate."""
    x = as_tensor4(x)
    if x.shape[1] != cfg.c_in:
        raise ShapeError(f"input has {x.shape[1]} channels, config expects {cfg.c_in}")
    wts.check(cfg)
    slices, stored = _conv_stack_slices(x, cfg, use_cc)
    spec = ConvSpec(cfg.group_width, 1)
    outs = []
    for oc, part in enumerate(slices):
        bias = None if wts.bias is None else wts.bias[oc:oc + 1]
        outs.append(grouped_conv_forward(part, ConvWeights(wts.weight[oc].reshape(spec.weight_shape), bias), spec))
    return concat_channels(outs), _stats(stored, x)


def scc_conv_stack_backward(grad_out, x, wts: SccWeights, cfg: SccConfig, use_cc: bool = False):
    x = as_tensor4(x)
    grad_out = as_tensor4(grad_out)
    wts.check(cfg)
    slices, _ = _conv_stack_slices(x, cfg, use_cc)
    cycle, starts = _filter_windows(cfg)
    spec = ConvSpec(cfg.group_width, 1)
    grad_w = np.empty(cfg.weight_shape)
    grad_b = np.empty(cfg.c_out) if wts.bias is not None else None
    d = cycle.cyclic_dist
    slice_grads = [np.zeros_like(slices[0]) for _ in range(d if use_cc else cfg.c_out)]
    for oc, part in enumerate(slices):
        bias = None if wts.bias is None else wts.bias[oc:oc + 1]
        g_part, g_w, g_b = grouped_conv_backward(
            np.ascontiguousarray(grad_out[:, oc:oc + 1]),
            part,
            ConvWeights(wts.weight[oc].reshape(spec.weight_shape), bias),
            spec,
        )
        slice_grads[oc % d if use_cc else oc] += g_part
        grad_w[oc] = g_w.reshape(-1)
        if grad_b is not None:
            grad_b[oc] = g_b[0]
    grad_in = np.zeros_like(x)
    win_starts = [w.start for w in cycle.windows] if use_cc else [int(s) for s in starts]
    for g, s in zip(slice_grads, win_starts):
        _scatter_window(grad_in, g, s)
    return SccGradients(grad_in, grad_w, grad_b)
