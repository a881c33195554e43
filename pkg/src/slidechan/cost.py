"""Closed-form multiply-accumulate and parameter counts for convolution layers and models."""
from __future__ import annotations

from dataclasses import dataclass

from .cycle import scc_config
from .errors import ConfigError

KINDS = ("Standard", "Depthwise", "Pointwise", "GroupPointwise", "SCC", "DscBlock")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    c_in: int
    c_out: int
    spatial: int
    kernel: int = 1
    stride: int = 1
    cg: int = 1
    co: object = 0
    count_bias: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}; expected one of {KINDS}")
        if min(self.c_in, self.c_out, self.spatial, self.kernel, self.stride) < 1:
            raise ConfigError(f"non-positive extent in {self}")
        if self.kind == "Depthwise" and self.c_out != self.c_in:
            raise ConfigError(f"depthwise layer needs c_out == c_in, got {self.c_in} -> {self.c_out}")
        if self.kind in ("Pointwise", "GroupPointwise", "SCC") and self.kernel != 1:
            raise ConfigError(f"{self.kind} layers are 1x1, got kernel={self.kernel}")
        if self.kind == "GroupPointwise" and (self.c_in % self.cg or self.c_out % self.cg):
            raise ConfigError(f"cg={self.cg} must divide c_in={self.c_in} and c_out={self.c_out}")
        if self.kind in ("SCC", "DscBlock"):
            scc_config(self.c_in, self.c_out, self.cg, self.co)
        self.out_spatial  # raises on a kernel larger than the padded input

    @property
    def padding(self) -> int:
        return self.kernel // 2

    @property
    def out_spatial(self) -> int:
        span = self.spatial + 2 * self.padding - self.kernel
        if span < 0:
            raise ConfigError(f"kernel {self.kernel} exceeds padded input {self.spatial}")
        return span // self.stride + 1


@dataclass(frozen=True)
class CostReport:
    macs: int
    params: int

    @property
    def flops(self) -> int:
        return 2 * self.macs

    def __add__(self, other: "CostReport") -> "CostReport":
        return CostReport(self.macs + other.macs, self.params + other.params)


def layer_cost(spec: LayerSpec) -> CostReport:
    f2 = spec.out_spatial ** 2
    w2 = spec.kernel ** 2
    c_in, c_out = spec.c_in, spec.c_out
    if spec.kind == "Standard":
        report = CostReport(f2 * c_out * w2 * c_in, w2 * c_in * c_out)
    elif spec.kind == "Depthwise":
        report = CostReport(f2 * c_in * w2, w2 * c_in)
        return CostReport(report.macs, report.params + (c_in if spec.count_bias else 0))
    elif spec.kind == "Pointwise":
        report = CostReport(f2 * c_out * c_in, c_in * c_out)
    elif spec.kind in ("GroupPointwise", "SCC"):
        width = c_in // spec.cg
        report = CostReport(f2 * c_out * width, c_out * width)
    else:
        dw = LayerSpec("Depthwise", c_in, c_in, spec.spatial, spec.kernel, spec.stride,
                       count_bias=spec.count_bias)
        mix = LayerSpec("SCC", c_in, c_out, dw.out_spatial, cg=spec.cg, co=spec.co,
                        count_bias=spec.count_bias)
        return layer_cost(dw) + layer_cost(mix)
    if spec.count_bias:
        report = CostReport(report.macs, report.params + c_out)
    return report


def model_cost(layers) -> CostReport:
    layers = list(layers)
    if not layers:
        raise ValueError("model_cost needs at least one layer")
    total = CostReport(0, 0)
    for spec in layers:
        total = total + layer_cost(spec)
    return total


def reduction_ratio(base: CostReport, variant: CostReport) -> tuple[float, float]:
    """``(variant.macs / base.macs, variant.params / base.params)``."""
    if base.macs == 0 or base.params == 0:
        raise ZeroDivisionError(f"base cost has a zero count: {base}")
    return variant.macs / base.macs, variant.params / base.params
