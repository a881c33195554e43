"""Wall-clock comparison of the direct kernel against the composition implementations."""
from __future__ import annotations

import csv
import itertools
import sys
import time
from dataclasses import astuple, dataclass, fields

import numpy as np

from .cycle import SccConfig, scc_config
from .errors import ConfigError
from .reference import (
    scc_channel_stack_backward,
    scc_channel_stack_forward,
    scc_conv_stack_backward,
    scc_conv_stack_forward,
)
from .scc import SccWeights, scc_backward, scc_forward

IMPLEMENTATIONS = ("direct", "channel_stack", "channel_stack_cc", "conv_stack", "conv_stack_cc")
CSV_COLUMNS = ("implementation", "phase", "c_in", "c_out", "cg", "co", "spatial", "batch", "wall_ms", "aux_channels")


@dataclass(frozen=True)
class BenchRow:
    implementation: str
    phase: str
    c_in: int
    c_out: int
    cg: int
    co: str
    spatial: int
    batch: int
    wall_ms: float
    aux_channels: int


@dataclass(frozen=True)
class BenchPoint:
    c_in: int
    c_out: int
    cg: int
    co: str
    spatial: int
    batch: int

    def config(self) -> SccConfig:
        return scc_config(self.c_in, self.c_out, self.cg, self.co)


_SWEEP_KEYS = {"cg": "cg", "co": "co", "cin": "c_in", "cout": "c_out", "spatial": "spatial", "batch": "batch"}


def parse_sweep(text: str) -> list[BenchPoint]:
    """Expand ``"cg=2,4;co=25,50;cin=64;cout=64;spatial=16;batch=8"`` into its cartesian product.

    ``co`` values are percentages; a trailing ``%`` is optional.
    """
    values: dict[str, list[str]] = {}
    for part in filter(None, (p.strip() for p in text.split(";"))):
        key, sep, rhs = part.partition("=")
        key = key.strip()
        if not sep or key not in _SWEEP_KEYS:
            raise ValueError(f"bad sweep term {part!r}; keys are {sorted(_SWEEP_KEYS)}")
        items = [v.strip() for v in rhs.split(",") if v.strip()]
        if not items:
            raise ValueError(f"sweep term {part!r} has no values")
        values[_SWEEP_KEYS[key]] = items
    missing = set(_SWEEP_KEYS.values()) - set(values)
    if missing:
        raise ValueError(f"sweep is missing {sorted(missing)}")
    points = []
    names = ["c_in", "c_out", "cg", "co", "spatial", "batch"]
    for combo in itertools.product(*(values[k] for k in names)):
        raw = dict(zip(names, combo))
        try:
            ints = {k: int(raw[k]) for k in names if k != "co"}
        except ValueError:
            raise ValueError(f"non-integer value in sweep point {raw}") from None
        if min(ints.values()) < 1:
            raise ValueError(f"sweep point {raw} has a non-positive extent")
        co = raw["co"] if raw["co"].endswith("%") else raw["co"] + "%"
        point = BenchPoint(co=co, **ints)
        try:
            point.config()
        except ConfigError as exc:
            raise ValueError(f"invalid sweep point {raw}: {exc}") from None
        points.append(point)
    return points


def _runners(x, wts, cfg, grad_out):
    def comp(fwd, bwd, cc):
        return (lambda: fwd(x, wts, cfg, cc)[0], lambda: bwd(grad_out, x, wts, cfg, cc))

    return {
        "direct": (lambda: scc_forward(x, wts, cfg), lambda: scc_backward(grad_out, x, wts, cfg)),
        "channel_stack": comp(scc_channel_stack_forward, scc_channel_stack_backward, False),
        "channel_stack_cc": comp(scc_channel_stack_forward, scc_channel_stack_backward, True),
        "conv_stack": comp(scc_conv_stack_forward, scc_conv_stack_backward, False),
        "conv_stack_cc": comp(scc_conv_stack_forward, scc_conv_stack_backward, True),
    }


def aux_channels(name: str, x, wts, cfg) -> int:
    if name == "direct":
        return 0
    fn = scc_channel_stack_forward if name.startswith("channel_stack") else scc_conv_stack_forward
    return fn(x, wts, cfg, name.endswith("_cc"))[1].aux_channels_stored


def _mean_ms(fn, repeats: int) -> float:
    fn()  # warm-up, excluded
    total = 0.0
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        total += time.perf_counter() - t0
    return max(total / repeats * 1e3, 1e-9)


def bench(points, repeats: int = 10, seed: int = 0, gate_tol: float = 1e-12) -> list[BenchRow]:
    """Time forward and backward of every implementation at every sweep point.

    Before timing, all implementations must agree elementwise within
    ``gate_tol`` on the shared input; otherwise ``AssertionError`` is raised.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    rows = []
    for p in points:
        cfg = p.config()
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((p.batch, p.c_in, p.spatial, p.spatial))
        wts = SccWeights.init(cfg, rng)
        grad_out = rng.standard_normal((p.batch, p.c_out, p.spatial, p.spatial))
        runners = _runners(x, wts, cfg, grad_out)
        reference = runners["direct"][0]()
        for name, (fwd, _) in runners.items():
            gap = float(np.abs(fwd() - reference).max())
            if gap > gate_tol:
                raise AssertionError(f"{name} disagrees with direct kernel by {gap} at {p}")
        for name in IMPLEMENTATIONS:
            fwd, bwd = runners[name]
            aux = aux_channels(name, x, wts, cfg)
            for phase, fn in (("forward", fwd), ("backward", bwd)):
                rows.append(BenchRow(name, phase, p.c_in, p.c_out, p.cg, p.co, p.spatial, p.batch,
                                     _mean_ms(fn, repeats), aux))
    return rows


def write_csv(rows, stream=None) -> None:
    writer = csv.writer(stream or sys.stdout)
    writer.writerow([f.name for f in fields(BenchRow)])
    for row in rows:
        r = astuple(row)
        writer.writerow([*r[:8], f"{r[8]:.4f}", r[9]])
