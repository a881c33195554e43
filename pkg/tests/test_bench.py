import csv
import io

import pytest

from slidechan.bench import CSV_COLUMNS, IMPLEMENTATIONS, bench, parse_sweep, write_csv
from slidechan.cycle import compute_channel_cycle


def test_parse_sweep_product():
    pts = parse_sweep("cg=2,4;co=25,50%;cin=16;cout=16,32;spatial=4;batch=2")
    assert len(pts) == 8
    assert {p.co for p in pts} == {"25%", "50%"}


@pytest.mark.parametrize("text", [
    "cg=3;co=50;cin=16;cout=16;spatial=4;batch=2",
    "cg=2;co=50;cin=16;cout=16;spatial=0;batch=2",
    "cg=2;co=50;cin=16;cout=16;spatial=4",
    "cg=2;co=50;cin=16;cout=16;spatial=4;batch=2;depth=3",
    "cg=x;co=50;cin=16;cout=16;spatial=4;batch=2",
])
def test_parse_sweep_errors(text):
    with pytest.raises(ValueError):
        parse_sweep(text)


def test_bench_rows_and_csv():
    rows = bench(parse_sweep("cg=2;co=50;cin=8;cout=8;spatial=3;batch=2"), repeats=1)
    assert len(rows) == 10
    assert {(r.implementation, r.phase) for r in rows} == {(i, p) for i in IMPLEMENTATIONS for p in ("forward", "backward")}
    assert all(r.wall_ms > 0 for r in rows)
    buf = io.StringIO()
    write_csv(rows, buf)
    parsed = list(csv.reader(io.StringIO(buf.getvalue())))
    assert tuple(parsed[0]) == CSV_COLUMNS and len(parsed) == 11


def test_bench_aux_channels_follow_cycle():
    point = parse_sweep("cg=2;co=25;cin=16;cout=16;spatial=2;batch=1")[0]
    cfg = point.config()
    d = compute_channel_cycle(cfg).cyclic_dist
    assert d < cfg.c_out
    aux = {(r.implementation, r.phase): r.aux_channels for r in bench([point], repeats=1)}
    assert aux[("direct", "forward")] == 0
    assert aux[("conv_stack", "forward")] == cfg.c_out * cfg.group_width
    assert aux[("conv_stack_cc", "forward")] == d * cfg.group_width


def test_bench_rejects_zero_repeats():
    with pytest.raises(ValueError):
        bench(parse_sweep("cg=2;co=50;cin=4;cout=4;spatial=2;batch=1"), repeats=0)
