"""Direct sliding-channel convolution: forward, input gradient and parameter gradients.

All three kernels give every output location to exactly one loop iteration and
sum its terms in a fixed order, so results do not depend on the thread count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .cycle import SccConfig, covering_table, filter_starts
from .errors import ShapeError
from .tensor import as_tensor4


@dataclass
class SccWeights:
    """Weight ``[oc, k]`` multiplies input channel ``(start_oc + k) % c_in``."""

    weight: np.ndarray
    bias: np.ndarray | None = None

    @classmethod
    def init(cls, cfg: SccConfig, rng: np.random.Generator) -> "SccWeights":
        bound = np.sqrt(1.0 / cfg.group_width)
        weight = rng.uniform(-bound, bound, size=cfg.weight_shape)
        bias = rng.uniform(-bound, bound, size=cfg.c_out) if cfg.has_bias else None
        return cls(weight, bias)

    def check(self, cfg: SccConfig) -> None:
        if self.weight.shape != cfg.weight_shape:
            raise ShapeError(f"weight shape {self.weight.shape} != {cfg.weight_shape}")
        if cfg.has_bias != (self.bias is not None):
            raise ShapeError(f"bias presence does not match has_bias={cfg.has_bias}")
        if self.bias is not None and self.bias.shape != (cfg.c_out,):
            raise ShapeError(f"bias shape {self.bias.shape} != ({cfg.c_out},)")


@dataclass
class SccGradients:
    grad_input: np.ndarray
    grad_weight: np.ndarray
    grad_bias: np.ndarray | None


@njit(parallel=True, cache=True)
def _forward_kernel(x, weight, bias, starts, out):
    n, c_in, h, w = x.shape
    c_out, gw = weight.shape
    for job in prange(n * c_out):
        b = job // c_out
        oc = job % c_out
        s = starts[oc]
        plane = out[b, oc]
        plane[:, :] = 0.0
        # window slot outermost for contiguous plane access; per-pixel sum order is still k = 0..gw-1
        for k in range(gw):
            wk = weight[oc, k]
            src = x[b, (s + k) % c_in]
            for i in range(h):
                for j in range(w):
                    plane[i, j] += wk * src[i, j]
        for i in range(h):
            for j in range(w):
                plane[i, j] += bias[oc]


@njit(parallel=True, cache=True)
def _backward_input_kernel(grad_out, weight, ptr, cover_oc, cover_slot, grad_in):
    n, c_in, h, w = grad_in.shape
    for job in prange(n * c_in):
        b = job // c_in
        ic = job % c_in
        plane = grad_in[b, ic]
        plane[:, :] = 0.0
        for t in range(ptr[ic], ptr[ic + 1]):
            wt = weight[cover_oc[t], cover_slot[t]]
            src = grad_out[b, cover_oc[t]]
            for i in range(h):
                for j in range(w):
                    plane[i, j] += wt * src[i, j]


@njit(parallel=True, cache=True)
def _backward_params_kernel(grad_out, x, starts, grad_w, grad_b):
    n, c_in, h, w = x.shape
    c_out, gw = grad_w.shape
    for oc in prange(c_out):
        s = starts[oc]
        for k in range(gw):
            ch = (s + k) % c_in
            acc = 0.0
            for b in range(n):
                for i in range(h):
                    for j in range(w):
                        acc += grad_out[b, oc, i, j] * x[b, ch, i, j]
            grad_w[oc, k] = acc
        acc = 0.0
        for b in range(n):
            for i in range(h):
                for j in range(w):
                    acc += grad_out[b, oc, i, j]
        grad_b[oc] = acc


def _bias_or_zeros(wts: SccWeights, cfg: SccConfig) -> np.ndarray:
    if wts.bias is None:
        return np.zeros(cfg.c_out)
    return np.ascontiguousarray(wts.bias, dtype=np.float64)


def scc_forward(x, wts: SccWeights, cfg: SccConfig) -> np.ndarray:
    """One worker per output plane; each output pixel is a dot product over its window."""
    x = as_tensor4(x)
    if x.shape[1] != cfg.c_in:
        raise ShapeError(f"input has {x.shape[1]} channels, config expects {cfg.c_in}")
    wts.check(cfg)
    n, _, h, w = x.shape
    out = np.empty((n, cfg.c_out, h, w))
    _forward_kernel(
        x,
        np.ascontiguousarray(wts.weight, dtype=np.float64),
        _bias_or_zeros(wts, cfg),
        filter_starts(cfg),
        out,
    )
    return out


def scc_backward_input(grad_out, wts: SccWeights, cfg: SccConfig) -> np.ndarray:
    """Input gradient, computed by pulling from the covering filters of each input channel.

    No two workers write the same element, so no accumulation is shared.
    """
    grad_out = as_tensor4(grad_out)
    if grad_out.shape[1] != cfg.c_out:
        raise ShapeError(f"grad_out has {grad_out.shape[1]} channels, config expects {cfg.c_out}")
    wts.check(cfg)
    n, _, h, w = grad_out.shape
    ptr, cover_oc, cover_slot = covering_table(cfg)
    grad_in = np.empty((n, cfg.c_in, h, w))
    _backward_input_kernel(
        grad_out, np.ascontiguousarray(wts.weight, dtype=np.float64), ptr, cover_oc, cover_slot, grad_in
    )
    return grad_in


def scc_backward_params(grad_out, x, cfg: SccConfig):
    """Return ``(grad_weight, grad_bias)``; ``grad_bias`` is None without bias."""
    grad_out = as_tensor4(grad_out)
    x = as_tensor4(x)
    if x.shape[1] != cfg.c_in or grad_out.shape[1] != cfg.c_out:
        raise ShapeError(f"channel mismatch: input {x.shape}, grad_out {grad_out.shape}")
    if (x.shape[0], *x.shape[2:]) != (grad_out.shape[0], *grad_out.shape[2:]):
        raise ShapeError(f"batch/spatial mismatch: input {x.shape}, grad_out {grad_out.shape}")
    grad_w = np.empty(cfg.weight_shape)
    grad_b = np.empty(cfg.c_out)
    _backward_params_kernel(grad_out, x, filter_starts(cfg), grad_w, grad_b)
    return grad_w, (grad_b if cfg.has_bias else None)


def scc_backward(grad_out, x, wts: SccWeights, cfg: SccConfig) -> SccGradients:
    grad_w, grad_b = scc_backward_params(grad_out, x, cfg)
    grad_in = scc_backward_input(grad_out, wts, cfg)
    if grad_in.shape != x.shape:
        raise ShapeError(f"grad_out spatial extents {grad_out.shape} do not match input {x.shape}")
    return SccGradients(grad_in, grad_w, grad_b)


def scc_forward_counted(x, wts: SccWeights, cfg: SccConfig):
    """Sequential :func:`scc_forward` that also returns the number of multiplies it executed."""
    x = as_tensor4(x)
    if x.shape[1] != cfg.c_in:
        raise ShapeError(f"input has {x.shape[1]} channels, config expects {cfg.c_in}")
    wts.check(cfg)
    n, _, h, w = x.shape
    out = np.empty((n, cfg.c_out, h, w))
    macs = _forward_counted_kernel(
        x, np.ascontiguousarray(wts.weight, dtype=np.float64), _bias_or_zeros(wts, cfg), filter_starts(cfg), out
    )
    return out, int(macs)


@njit(cache=True)
def _forward_counted_kernel(x, weight, bias, starts, out):
    n, c_in, h, w = x.shape
    c_out, gw = weight.shape
    count = 0
    for b in range(n):
        for oc in range(c_out):
            s = starts[oc]
            for i in range(h):
                for j in range(w):
                    acc = 0.0
                    for k in range(gw):
                        acc += weight[oc, k] * x[b, (s + k) % c_in, i, j]
                        count += 1
                    out[b, oc, i, j] = acc + bias[oc]
    return count
