"""Slow, independent re-derivations used as test oracles.

Nothing here calls into the code paths it checks: window starts come from a
literal walk of the filter sequence, and the layer is rebuilt as a dense
(c_out, c_in) matrix.
"""
import numpy as np


def walk_windows(c_in, cg, overlap, c_out, truncate=True):
    """Step-by-step window iteration with (start, end) items and modulo wrap.

    With ``truncate`` the walk stops at the first repeated item, otherwise it
    keeps going for all ``c_out`` filters.
    """
    group_width = c_in // cg
    start, end = 0, group_width % c_in
    start_v, end_v = 0, group_width
    items = []
    for _ in range(c_out):
        item = (start, end)
        if truncate and item in items:
            break
        items.append(item)
        start_v = end_v - overlap
        end_v = start_v + group_width
        start = start_v % c_in
        end = end_v % c_in
    return items


def dense_matrix(cfg, weight):
    """Expand sliding-channel weights into the equivalent dense pointwise matrix."""
    starts = [s for s, _ in walk_windows(cfg.c_in, cfg.cg, cfg.overlap_channels, cfg.c_out, truncate=False)]
    m = np.zeros((cfg.c_out, cfg.c_in))
    for oc, s in enumerate(starts):
        for k in range(cfg.group_width):
            m[oc, (s + k) % cfg.c_in] += weight[oc, k]
    return m, starts


def scc_forward_dense(x, cfg, weight, bias=None):
    m, _ = dense_matrix(cfg, weight)
    out = np.einsum("oc,nchw->nohw", m, x)
    if bias is not None:
        out += bias[None, :, None, None]
    return out


def scc_grads_dense(g, x, cfg, weight):
    m, starts = dense_matrix(cfg, weight)
    gin = np.einsum("oc,nohw->nchw", m, g)
    gw = np.zeros_like(weight)
    for oc, s in enumerate(starts):
        for k in range(cfg.group_width):
            gw[oc, k] = (g[:, oc] * x[:, (s + k) % cfg.c_in]).sum()
    return gin, gw, g.sum(axis=(0, 2, 3))


def conv2d_loops(x, weight, bias, stride, padding, groups):
    """Plain python loops with explicit bounds checks instead of padding."""
    n, c_in, h, w = x.shape
    c_out, cpg, k, _ = weight.shape
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1
    out = np.zeros((n, c_out, ho, wo))
    per_out = c_out // groups
    for b in range(n):
        for oc in range(c_out):
            g = oc // per_out
            for oy in range(ho):
                for ox in range(wo):
                    s = 0.0 if bias is None else bias[oc]
                    for a in range(cpg):
                        for i in range(k):
                            for j in range(k):
                                yy = oy * stride + i - padding
                                xx = ox * stride + j - padding
                                if 0 <= yy < h and 0 <= xx < w:
                                    s += weight[oc, a, i, j] * x[b, g * cpg + a, yy, xx]
                    out[b, oc, oy, ox] = s
    return out


def depthwise_eq(x, kernels, padding):
    """Per-channel spatial filtering, each channel on its own (same-size output)."""
    n, c, h, w = x.shape
    k = kernels.shape[-1]
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    out = np.zeros((n, c, h + 2 * padding - k + 1, w + 2 * padding - k + 1))
    for i in range(k):
        for j in range(k):
            out += kernels[None, :, i, j, None, None] * xp[:, :, i:i + out.shape[2], j:j + out.shape[3]]
    return out


def pointwise_eq(x, matrix):
    return np.einsum("oa,nahw->nohw", matrix, x)
