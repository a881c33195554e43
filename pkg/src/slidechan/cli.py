"""Command-line entry point: ``slidechan {cycle,cost,check,train,bench}``."""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numba

from . import bench as bench_mod
from .cost import layer_cost, model_cost
from .cycle import compute_channel_cycle, scc_config
from .errors import ConfigError, FormatError, NumericError, ShapeError, SpecError
from .gradcheck import grad_check_driver
from .network import build_network, load_model_spec
from .tensor import fixture_write
from .train import TrainConfig, load_dataset, synth_dataset, train


def _set_threads(n: int | None) -> None:
    if n is None:
        return
    limit = numba.config.NUMBA_NUM_THREADS
    if not 1 <= n <= limit:
        raise SystemExit(f"--threads must be in [1, {limit}] (raise NUMBA_NUM_THREADS for more)")
    numba.set_num_threads(n)


def cmd_cycle(args) -> int:
    cfg = scc_config(args.c_in, args.c_out, args.cg, args.co)
    cycle = compute_channel_cycle(cfg)
    for r, w in enumerate(cycle.windows):
        print(f"{r} {w.start}..{(w.start + w.length - 1) % cfg.c_in}")
    print(f"cyclic_dist {cycle.cyclic_dist}")
    return 0


def cmd_cost(args) -> int:
    spec = load_model_spec(args.model)
    layers = spec.layer_specs(args.spatial, count_bias=args.bias)
    reports = [layer_cost(s) for s in layers]
    total = model_cost(layers)
    if args.csv:
        w = csv.writer(sys.stdout)
        w.writerow(["layer", "kind", "c_in", "c_out", "spatial", "macs", "flops", "params"])
        for i, (s, r) in enumerate(zip(layers, reports)):
            w.writerow([i, s.kind, s.c_in, s.c_out, s.spatial, r.macs, r.flops, r.params])
        w.writerow(["total", "", "", "", "", total.macs, total.flops, total.params])
        return 0
    print(f"{'layer':>5} {'kind':<15} {'c_in':>5} {'c_out':>5} {'F':>4} {'MACs':>14} {'FLOPs':>14} {'params':>11}")
    for i, (s, r) in enumerate(zip(layers, reports)):
        print(f"{i:>5} {s.kind:<15} {s.c_in:>5} {s.c_out:>5} {s.spatial:>4} {r.macs:>14} {r.flops:>14} {r.params:>11}")
    print(f"{'total':>5} {'':<15} {'':>5} {'':>5} {'':>4} {total.macs:>14} {total.flops:>14} {total.params:>11}")
    return 0


def cmd_check(args) -> int:
    fixed = {k: v for k, v in (("c_in", args.c_in), ("c_out", args.c_out), ("cg", args.cg), ("co", args.co),
                               ("spatial", args.spatial), ("batch", args.batch)) if v is not None}
    on_trial = None
    if args.fixtures:
        out = Path(args.fixtures)
        out.mkdir(parents=True, exist_ok=True)

        def on_trial(t, cfg, x, wts, y):
            fixture_write(x, out / f"trial{t:03d}_input.dsx")
            fixture_write(wts.weight.reshape(1, 1, *cfg.weight_shape), out / f"trial{t:03d}_weight.dsx")
            fixture_write(y, out / f"trial{t:03d}_output.dsx")

    report = grad_check_driver(args.trials, args.eps, args.tol, args.seed, fixed=fixed, on_scc_trial=on_trial)
    w = csv.writer(sys.stdout)
    w.writerow(["trial", "operator", "config", "max_abs_diff", "max_rel_grad_err", "status"])
    for t in report.trials:
        w.writerow([t.trial, t.operator, t.config, f"{t.max_abs_diff:.3e}", f"{t.max_rel_grad_err:.3e}",
                    "pass" if t.passed else "FAIL"])
    return 0 if report.passed else 1


def cmd_train(args) -> int:
    spec = load_model_spec(args.model)
    net = build_network(spec, seed=args.seed)
    if args.dataset == "synthetic":
        c = spec.input_channels or spec.layers[0].c_in
        hw = spec.input_spatial or args.spatial
        data = synth_dataset(args.seed, args.samples, spec.classes, c, hw)
    else:
        data = load_dataset(args.dataset)
    cfg = TrainConfig(args.epochs, args.batch, args.lr, args.seed)
    print("epoch,loss,accuracy")
    train(net, data, cfg, log=lambda e, loss, acc: print(f"{e},{loss:.6f},{acc:.4f}", flush=True))
    return 0


def cmd_bench(args) -> int:
    try:
        points = bench_mod.parse_sweep(args.sweep)
    except ValueError as exc:
        raise SystemExit(f"bench: {exc}") from None
    rows = bench_mod.bench(points, args.repeats, args.seed)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            bench_mod.write_csv(rows, fh)
    else:
        bench_mod.write_csv(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--threads", type=int, default=None, help="numba worker threads")

    parser = argparse.ArgumentParser(prog="slidechan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cycle", parents=[shared], help="print the distinct input-channel windows")
    p.add_argument("--c-in", type=int, required=True)
    p.add_argument("--c-out", type=int, required=True)
    p.add_argument("--cg", type=int, required=True)
    p.add_argument("--co", default="50%", help='overlap as "50%%" or a channel count such as "1"')
    p.set_defaults(func=cmd_cycle)

    p = sub.add_parser("cost", parents=[shared], help="MACs and parameters of a model spec")
    p.add_argument("--model", required=True)
    p.add_argument("--spatial", type=int, default=None, help="input size if the model spec has none")
    p.add_argument("--bias", action="store_true", help="count bias parameters")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("check", parents=[shared], help="gradient and oracle-equivalence checks")
    p.add_argument("--c-in", type=int)
    p.add_argument("--c-out", type=int)
    p.add_argument("--cg", type=int)
    p.add_argument("--co")
    p.add_argument("--spatial", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--fixtures", help="directory to write per-trial input/weight/output fixtures")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("train", parents=[shared], help="train a model spec with plain SGD")
    p.add_argument("--model", required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--dataset", default="synthetic", help='"synthetic" or a fixture directory')
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--spatial", type=int, default=8, help="synthetic input size if the model spec has none")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", parents=[shared], help="time direct vs composition implementations")
    p.add_argument("--sweep", default="cg=2;co=50;cin=64;cout=64;spatial=16;batch=8")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _set_threads(args.threads)
    try:
        return args.func(args)
    except (ConfigError, SpecError, ShapeError, FormatError, NumericError) as exc:
        print(f"slidechan {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
