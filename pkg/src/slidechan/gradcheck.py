"""Finite-difference and oracle checks for the sliding-channel and grouped conv operators."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cycle import SccConfig, scc_config
from .reference import (
    ConvSpec,
    ConvWeights,
    grouped_conv_backward,
    grouped_conv_forward,
    scc_channel_stack_forward,
    scc_conv_stack_forward,
)
from .scc import SccGradients, SccWeights, scc_backward, scc_forward


def relative_error(analytic: np.ndarray, numeric: np.ndarray, scale_floor: float = 1e-2) -> float:
    """Largest entrywise ``|a - n| / max(|a|, |n|, scale_floor * max|a|)``.

    Central differences carry an absolute rounding error of roughly
    ``ulp(loss) / eps``, so entries far below the array's largest gradient are
    judged against ``scale_floor`` times that largest magnitude instead of
    their own size.
    """
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    numeric = np.asarray(numeric, dtype=np.float64).ravel()
    if analytic.size == 0:
        return 0.0
    floor = scale_floor * max(np.abs(analytic).max(), np.abs(numeric).max())
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    diff = np.abs(analytic - numeric)
    if not scale.any():
        return 0.0
    return float(np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), 0.0).max())


def numeric_gradient(f, arr: np.ndarray, eps: float) -> np.ndarray:
    """Central differences of scalar ``f()`` with respect to every entry of ``arr`` (perturbed in place)."""
    grad = np.empty_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f()
        flat[i] = orig - eps
        lo = f()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * eps)
    return grad


def _loss_and_cotangent(out: np.ndarray, probe: np.ndarray):
    # L = <probe, out> + 0.5 |out|^2, so dL/dout = probe + out
    return float((probe * out).sum() + 0.5 * (out * out).sum()), probe + out


def scc_gradient_error(x, wts: SccWeights, cfg: SccConfig, probe, eps: float, backward=scc_backward) -> float:
    """Max relative error between ``backward`` and central differences over input, weight and bias."""
    _, cot = _loss_and_cotangent(scc_forward(x, wts, cfg), probe)
    grads: SccGradients = backward(cot, x, wts, cfg)

    def loss():
        return _loss_and_cotangent(scc_forward(x, wts, cfg), probe)[0]

    errs = [
        relative_error(grads.grad_input, numeric_gradient(loss, x, eps)),
        relative_error(grads.grad_weight, numeric_gradient(loss, wts.weight, eps)),
    ]
    if wts.bias is not None:
        errs.append(relative_error(grads.grad_bias, numeric_gradient(loss, wts.bias, eps)))
    return max(errs)


def conv_gradient_error(x, wts: ConvWeights, spec: ConvSpec, probe, eps: float) -> float:
    _, cot = _loss_and_cotangent(grouped_conv_forward(x, wts, spec), probe)
    g_in, g_w, g_b = grouped_conv_backward(cot, x, wts, spec)

    def loss():
        return _loss_and_cotangent(grouped_conv_forward(x, wts, spec), probe)[0]

    errs = [
        relative_error(g_in, numeric_gradient(loss, x, eps)),
        relative_error(g_w, numeric_gradient(loss, wts.weight, eps)),
    ]
    if wts.bias is not None:
        errs.append(relative_error(g_b, numeric_gradient(loss, wts.bias, eps)))
    return max(errs)


def oracle_max_diff(x, wts: SccWeights, cfg: SccConfig) -> float:
    """Largest elementwise gap between the direct kernel and all four composition variants."""
    direct = scc_forward(x, wts, cfg)
    gap = 0.0
    for fn in (scc_channel_stack_forward, scc_conv_stack_forward):
        for use_cc in (False, True):
            out, _ = fn(x, wts, cfg, use_cc)
            gap = max(gap, float(np.abs(out - direct).max()))
    return gap


def random_scc_config(rng: np.random.Generator, max_c_in: int = 12, max_c_out: int = 12,
                      c_in=None, c_out=None, cg=None, co=None) -> SccConfig:
    """Sample a valid config; any argument given explicitly is kept as is."""
    if c_in is None:
        c_in = int(rng.integers(1, max_c_in + 1))
    if cg is None:
        cg = int(rng.choice([d for d in range(1, c_in + 1) if c_in % d == 0]))
    if c_out is None:
        c_out = int(rng.integers(1, max_c_out + 1))
    if co is None:
        gw = c_in // cg
        # full overlap only makes sense for cg=1, which scc_config pins anyway
        co = int(rng.integers(0, gw)) if gw > 1 else 0
    return scc_config(c_in, c_out, cg, co, has_bias=bool(rng.integers(0, 2)))


def random_conv_spec(rng: np.random.Generator, max_c: int = 6) -> ConvSpec:
    kernel = int(rng.choice([1, 3]))
    c_in = int(rng.integers(1, max_c + 1))
    groups = int(rng.choice([1, 2, c_in] if c_in % 2 == 0 else [1, c_in]))
    c_out = groups * int(rng.integers(1, 3))
    return ConvSpec(c_in, c_out, kernel, int(rng.integers(1, 3)), int(rng.integers(0, kernel // 2 + 1)), groups)


@dataclass
class TrialResult:
    trial: int
    operator: str
    config: str
    max_abs_diff: float
    max_rel_grad_err: float
    passed: bool


@dataclass
class GradCheckReport:
    tol: float
    oracle_tol: float
    trials: list[TrialResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.trials)

    def failures(self) -> list[TrialResult]:
        return [t for t in self.trials if not t.passed]


def grad_check_driver(trials: int = 20, eps: float = 1e-5, tol: float = 1e-4, seed: int = 0,
                      max_c_in: int = 12, max_c_out: int = 12, max_spatial: int = 5, max_batch: int = 3,
                      oracle_tol: float = 1e-12, scc_backward_fn=scc_backward,
                      fixed: dict | None = None, on_scc_trial=None) -> GradCheckReport:
    """Random-config gradient checks for SCC and grouped conv.

    Each trial checks one random SCC layer (finite differences plus agreement
    with the composition oracles) and one random grouped conv. ``fixed`` may pin
    any of ``c_in, c_out, cg, co, spatial, batch``. ``on_scc_trial(t, cfg, x,
    weights, output)`` is called with each SCC trial's tensors. A trial passes when its
    relative gradient error is strictly below ``tol``.
    """
    if eps <= 0 or tol < 0:
        raise ValueError(f"eps must be > 0 and tol >= 0 (eps={eps}, tol={tol})")
    fixed = fixed or {}
    rng = np.random.default_rng(seed)
    report = GradCheckReport(tol, oracle_tol)
    for t in range(trials):
        cfg = random_scc_config(rng, max_c_in, max_c_out,
                                **{k: fixed[k] for k in ("c_in", "c_out", "cg", "co") if k in fixed})
        h = fixed.get("spatial", int(rng.integers(1, max_spatial + 1)))
        n = fixed.get("batch", int(rng.integers(1, max_batch + 1)))
        x = rng.standard_normal((n, cfg.c_in, h, h))
        wts = SccWeights.init(cfg, rng)
        probe = rng.standard_normal((n, cfg.c_out, h, h))
        gap = oracle_max_diff(x, wts, cfg)
        if on_scc_trial is not None:
            on_scc_trial(t, cfg, x, wts, scc_forward(x, wts, cfg))
        err = scc_gradient_error(x, wts, cfg, probe, eps, scc_backward_fn)
        desc = f"c_in={cfg.c_in} c_out={cfg.c_out} cg={cfg.cg} overlap={cfg.overlap_channels} spatial={h} batch={n}"
        report.trials.append(TrialResult(t, "scc", desc, gap, err, err < tol and gap <= oracle_tol))

        spec = random_conv_spec(rng)
        hc = max(spec.kernel, int(rng.integers(1, max_spatial + 1)))
        xc = rng.standard_normal((n, spec.c_in, hc, hc))
        cw = ConvWeights.init(spec, rng, bias=bool(rng.integers(0, 2)))
        probe_c = rng.standard_normal((n, spec.c_out, spec.out_size(hc), spec.out_size(hc)))
        err_c = conv_gradient_error(xc, cw, spec, probe_c, eps)
        desc_c = (f"c_in={spec.c_in} c_out={spec.c_out} kernel={spec.kernel} stride={spec.stride} "
                  f"padding={spec.padding} groups={spec.groups} spatial={hc} batch={n}")
        report.trials.append(TrialResult(t, "grouped_conv", desc_c, 0.0, err_c, err_c < tol))
    return report
