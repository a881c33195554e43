"""Sliding-channel configuration and the cyclic input-channel windows of its filters.

Each output filter reads ``group_width = c_in // cg`` consecutive input channels,
treating the channels as a ring. Filter ``oc + 1`` starts ``shift`` channels after
filter ``oc``, where ``shift = group_width - overlap_channels``. Since the start
positions live on a ring of ``c_in`` positions, the sequence of windows repeats
after ``cyclic_dist`` filters; only that first cycle is stored and later filters
index into it with ``oc % cyclic_dist``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class SccConfig:
    c_in: int
    c_out: int
    cg: int
    overlap_channels: int
    has_bias: bool = True

    def __post_init__(self):
        if self.c_in < 1 or self.c_out < 1:
            raise ConfigError(f"channel counts must be >= 1 (c_in={self.c_in}, c_out={self.c_out})")
        if not 1 <= self.cg <= self.c_in:
            raise ConfigError(f"cg={self.cg} must lie in [1, c_in={self.c_in}]")
        if self.c_in % self.cg:
            raise ConfigError(f"c_in={self.c_in} is not divisible by cg={self.cg}")
        if not 0 <= self.overlap_channels <= self.group_width:
            raise ConfigError(
                f"overlap of {self.overlap_channels} channels outside [0, {self.group_width}]"
            )

    @property
    def group_width(self) -> int:
        return self.c_in // self.cg

    @property
    def shift(self) -> int:
        return self.group_width - self.overlap_channels

    @property
    def weight_shape(self) -> tuple[int, int]:
        return (self.c_out, self.group_width)


def _parse_overlap(co, group_width: int) -> int:
    """Resolve an overlap given as a ratio, a channel count or a string into channels.

    ``float`` values are ratios in [0, 1]; ``int`` values are channel counts.
    Strings ending in ``%`` are percentages, other strings are channel counts.
    Ratios round to the nearest channel (half up), so 33% of 3 channels is 1.
    """
    if isinstance(co, str):
        text = co.strip()
        if text.endswith("%"):
            try:
                co = float(text[:-1]) / 100.0
            except ValueError:
                raise ConfigError(f"cannot parse overlap {text!r}") from None
        else:
            try:
                co = int(text)
            except ValueError:
                raise ConfigError(f"cannot parse overlap {text!r}") from None
    if isinstance(co, bool):
        raise ConfigError("overlap must be a ratio or a channel count, not a bool")
    if isinstance(co, (int, np.integer)):
        if not 0 <= co <= group_width:
            raise ConfigError(f"overlap of {co} channels outside [0, {group_width}]")
        return int(co)
    co = float(co)
    if not 0.0 <= co <= 1.0:
        raise ConfigError(f"overlap ratio {co} outside [0, 1]")
    return int(math.floor(co * group_width + 0.5))


def scc_config(c_in: int, c_out: int, cg: int, co=0.5, has_bias: bool = True) -> SccConfig:
    """Build a validated :class:`SccConfig`.

    With ``cg == 1`` every filter already sees all input channels, so the
    overlap is pinned to the full window (shift 0) and the operator is a plain
    pointwise convolution whatever ``co`` says.
    """
    if cg < 1 or c_in < 1:
        raise ConfigError(f"cg and c_in must be >= 1 (cg={cg}, c_in={c_in})")
    if c_in % cg:
        raise ConfigError(f"c_in={c_in} is not divisible by cg={cg}")
    group_width = c_in // cg
    overlap = _parse_overlap(co, group_width)
    if cg == 1:
        overlap = group_width
    elif overlap == group_width:
        warnings.warn(
            f"overlap equals the window width ({group_width}) with cg={cg}: "
            "every filter reads the same channels",
            stacklevel=2,
        )
    return SccConfig(c_in, c_out, cg, overlap, has_bias)


@dataclass(frozen=True)
class ChannelWindow:
    start: int
    length: int

    def channels(self, c_in: int) -> list[int]:
        return [(self.start + k) % c_in for k in range(self.length)]

    def contains(self, ic: int, c_in: int) -> bool:
        return (ic - self.start) % c_in < self.length

    def __str__(self):
        return f"{self.start}..{self.start + self.length - 1}"


@dataclass(frozen=True)
class ChannelCycle:
    windows: tuple[ChannelWindow, ...]
    c_in: int

    @property
    def cyclic_dist(self) -> int:
        return len(self.windows)

    @cached_property
    def starts(self) -> np.ndarray:
        return np.array([w.start for w in self.windows], dtype=np.int64)


def compute_channel_cycle(cfg: SccConfig) -> ChannelCycle:
    """Walk the filters in order, collecting windows until one repeats or c_out is reached."""
    windows: list[ChannelWindow] = []
    seen: set[int] = set()
    start = 0
    for _ in range(cfg.c_out):
        if start in seen:
            break
        seen.add(start)
        windows.append(ChannelWindow(start, cfg.group_width))
        start = (start + cfg.shift) % cfg.c_in
    return ChannelCycle(tuple(windows), cfg.c_in)


def window_of(cycle: ChannelCycle, oc: int) -> ChannelWindow:
    if oc < 0:
        raise IndexError(f"output channel {oc} is negative")
    return cycle.windows[oc % cycle.cyclic_dist]


def filter_starts(cfg: SccConfig, cycle: ChannelCycle | None = None) -> np.ndarray:
    """First input channel of every output filter, shape (c_out,)."""
    if cycle is None:
        cycle = compute_channel_cycle(cfg)
    return cycle.starts[np.arange(cfg.c_out) % cycle.cyclic_dist]


def covering_filters(cfg: SccConfig, cycle: ChannelCycle, ic: int) -> list[int]:
    """Output channels whose window contains input channel ``ic``, ascending."""
    if not 0 <= ic < cfg.c_in:
        raise IndexError(f"input channel {ic} outside [0, {cfg.c_in})")
    # membership depends only on oc % cyclic_dist, so test one cycle and tile it
    residues = [r for r, w in enumerate(cycle.windows) if w.contains(ic, cfg.c_in)]
    d = cycle.cyclic_dist
    return [oc for oc in range(cfg.c_out) if oc % d in residues]


def covering_table(cfg: SccConfig, cycle: ChannelCycle | None = None):
    """CSR form of :func:`covering_filters` for every input channel.

    Returns ``(ptr, oc, slot)``: the filters covering input channel ``ic`` are
    ``oc[ptr[ic]:ptr[ic + 1]]`` and ``slot`` gives the weight position each one
    uses for ``ic``.
    """
    if cycle is None:
        cycle = compute_channel_cycle(cfg)
    starts = filter_starts(cfg, cycle)
    ptr = np.zeros(cfg.c_in + 1, dtype=np.int64)
    ocs: list[int] = []
    slots: list[int] = []
    for ic in range(cfg.c_in):
        for oc in covering_filters(cfg, cycle, ic):
            ocs.append(oc)
            slots.append((ic - int(starts[oc])) % cfg.c_in)
        ptr[ic + 1] = len(ocs)
    return ptr, np.array(ocs, dtype=np.int64), np.array(slots, dtype=np.int64)
