"""``etica`` command line.

Exit codes: 0 success, 2 config error, 3 trace error, 4 internal identity
violation. ``ETICA_LOG`` sets the log level (e.g. ``ETICA_LOG=debug``).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from collections import defaultdict

from . import experiments
from .config import ConfigError, RunConfig, load_config
from .engine import EticaEngine, InvariantViolation
from .metrics import ReportConsistencyError, report_to_csv
from .partition import VmDemand, optimize_partition
from .policy_sim import simulate_single_level
from .reuse import DistanceMetric, build_mrc, compute_distances
from .trace import TraceError, block_accesses

EXIT_CONFIG = 2
EXIT_TRACE = 3
EXIT_INTERNAL = 4

log = logging.getLogger("etica")


def _emit(obj, out: str | None, fmt: str = "json", csv_text: str | None = None):
    text = csv_text if fmt == "csv" and csv_text is not None else json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    changes = {}
    if getattr(args, "npe", False):
        changes["promotion_eviction"] = False
    if getattr(args, "queue_fraction", None) is not None:
        changes["queue_fraction"] = args.queue_fraction
    return cfg.replace(**changes) if changes else cfg


def _per_vm_accesses(args) -> dict:
    cfg = RunConfig(block_size=args.block_size, trace_format=args.trace_format)
    timeline = experiments.load_timeline(args.trace, cfg)
    by_vm = defaultdict(list)
    for b, op in block_accesses(timeline, cfg.block_size):
        by_vm[b.vm_id].append((b, op))
    return by_vm


def cmd_simulate(args) -> int:
    cfg = _config(args)
    timeline = experiments.load_timeline(args.trace, cfg)
    if cfg.engine == "single":
        report = experiments.run_single(timeline, cfg)
        engine = None
    else:
        engine = EticaEngine(cfg)
        report = engine.run(timeline)
    report["config"] = cfg.to_dict()
    csv_text = report_to_csv(report) if engine is not None else None
    _emit(report, args.out, args.format, csv_text)
    if args.dump_popularity and engine is not None:
        with open(args.dump_popularity, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["vm_id", "block", "score", "num_acc"])
            for vm in sorted(engine.vms):
                for b, score, n in engine.vms[vm].table.rows():
                    w.writerow([vm, b.block, repr(score), n])
    return 0


def cmd_single(args) -> int:
    rows = {}
    for vm, acc in sorted(_per_vm_accesses(args).items()):
        rows[str(vm)] = simulate_single_level(acc, args.policy, args.capacity, args.assoc).to_dict()
    out = {"policy": args.policy, "capacity_blocks": args.capacity, "associativity": args.assoc, "vms": rows}
    flat = [{"vm": vm, **r} for vm, r in rows.items()]
    _emit(out, args.out, args.format, _rows_csv(flat))
    return 0


def cmd_reuse(args) -> int:
    metric = DistanceMetric.parse(args.metric)
    out = {"metric": metric.value, "vms": {}}
    flat = []
    for vm, acc in sorted(_per_vm_accesses(args).items()):
        prof = compute_distances(acc, metric)
        out["vms"][str(vm)] = prof.to_dict(per_access=args.per_access)
        for d, n in prof.to_dict()["histogram"].items():
            flat.append({"vm": vm, "distance": d, "count": n})
    _emit(out, args.out, args.format, _rows_csv(flat))
    return 0


def cmd_mrc(args) -> int:
    metric = DistanceMetric.parse(args.metric)
    out = {"metric": metric.value, "vms": {}}
    flat = []
    for vm, acc in sorted(_per_vm_accesses(args).items()):
        mrc = build_mrc(compute_distances(acc, metric), len(acc))
        out["vms"][str(vm)] = {"total_requests": len(acc), **mrc.to_dict()}
        flat.extend({"vm": vm, "cache_blocks": s, "hit_ratio": h} for s, h in zip(mrc.sizes, mrc.hits))
    _emit(out, args.out, args.format, _rows_csv(flat))
    return 0


def cmd_partition(args) -> int:
    try:
        with open(args.demands, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise TypeError("top level must be an object")
        vms = data.get("vms", data)
        demands = {int(vm): VmDemand.from_dict(d) for vm, d in vms.items()}
    except FileNotFoundError:
        raise ConfigError(f"demands file not found: {args.demands}") from None
    except (AttributeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad demands file: {exc}") from None
    plan = optimize_partition(demands, args.dram, args.ssd)
    out = plan.to_dict()
    flat = [{"vm": vm, **a} for vm, a in out["vms"].items()]
    _emit(out, args.out, args.format, _rows_csv(flat))
    return 0


def cmd_compare(args) -> int:
    cfgs = [load_config(p) for p in args.config]
    try:
        result = experiments.compare(cfgs, args.trace, jobs=args.jobs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit(result, args.out, args.format, _rows_csv(result["columns"]))
    return 0


def cmd_interval_sweep(args) -> int:
    cfg = _config(args)
    try:
        intervals = [int(x) for x in args.intervals.split(",") if x.strip()]
        result = experiments.interval_sweep(cfg, intervals, args.trace, jobs=args.jobs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit(result, args.out, args.format, _rows_csv(result["rows"]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="etica", description="Two-level DRAM+SSD I/O cache simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=False):
        sp.add_argument("--trace", action="append", required=True,
                        help="trace file or directory (repeatable; one file per VM)")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        if config:
            sp.add_argument("--config", help="JSON run config")
        else:
            sp.add_argument("--block-size", type=int, default=4096)
            sp.add_argument("--trace-format", choices=("auto", "msr", "simple"), default="auto")

    sp = sub.add_parser("simulate", help="replay traces through the two-level cache")
    common(sp, config=True)
    sp.add_argument("--npe", action="store_true", help="disable promotion/eviction")
    sp.add_argument("--queue-fraction", type=float)
    sp.add_argument("--dump-popularity", metavar="CSV")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("single", help="single-level cache under one write policy")
    common(sp)
    sp.add_argument("--policy", choices=("wb", "wt", "ro", "wo", "wbwo"), required=True)
    sp.add_argument("--capacity", type=int, required=True)
    sp.add_argument("--assoc", type=int, default=512, help="0 = fully associative")
    sp.set_defaults(func=cmd_single)

    for name, func in (("reuse", cmd_reuse), ("mrc", cmd_mrc)):
        sp = sub.add_parser(name, help=f"{name} analysis per VM")
        common(sp)
        sp.add_argument("--metric", choices=[m.value for m in DistanceMetric], required=True)
        if name == "reuse":
            sp.add_argument("--per-access", action="store_true")
        sp.set_defaults(func=func)

    sp = sub.add_parser("partition", help="PPC partitioning from a demands file")
    sp.add_argument("--demands", required=True)
    sp.add_argument("--dram", type=int, required=True)
    sp.add_argument("--ssd", type=int, required=True)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("compare", help="run several configs on the same traces")
    sp.add_argument("--config", action="append", required=True)
    sp.add_argument("--trace", action="append", required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("interval-sweep", help="sweep the promotion/eviction interval")
    common(sp, config=True)
    sp.add_argument("--intervals", required=True, help="comma-separated, e.g. 100,1000,10000")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_interval_sweep)
    return p


def main(argv=None) -> int:
    level = os.environ.get("ETICA_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"etica: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TraceError, FileNotFoundError) as exc:
        print(f"etica: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except (ReportConsistencyError, InvariantViolation) as exc:
        print(f"etica: internal consistency failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"etica: invalid argument: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
