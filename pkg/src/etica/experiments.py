"""Experiment drivers shared by the CLI and scripts/."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .config import RunConfig
from .engine import run_etica
from .metrics import SCHEMA, LatencyConfig
from .policy_sim import SingleLevelCache, WritePolicy
from .trace import TraceRecord, load_trace, merge_streams, to_blocks, Op


def trace_files(paths: Sequence[str | os.PathLike]) -> list[Path]:
    """Expand directories (sorted by name) into trace files."""
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(f for f in p.iterdir() if f.is_file() and not f.name.startswith(".")))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(f"trace not found: {p}")
    return out


def load_timeline(paths: Sequence[str | os.PathLike], cfg: RunConfig) -> list[TraceRecord]:
    """One VM per file, numbered in order unless ``cfg.vm_map`` names it."""
    files = trace_files(paths)
    streams = []
    for i, f in enumerate(files):
        vm = cfg.vm_map.get(f.name, i)
        streams.append(load_trace(f, cfg.trace_format, vm_id=vm))
    return merge_streams(streams)


def _single_latency(policy: WritePolicy, op: Op, hit: bool, lat: LatencyConfig) -> float:
    if op is Op.READ:
        if hit:
            return lat.ssd_read_us
        return lat.hdd_read_us + (lat.ssd_write_us if policy.allocate_on_read_miss else 0.0)
    if policy in (WritePolicy.WB, WritePolicy.WO):
        return lat.ssd_write_us
    return lat.hdd_write_us


def run_single(timeline: Sequence[TraceRecord], cfg: RunConfig) -> dict:
    """One-level SSD cache baseline with the configured total capacity."""
    policy = WritePolicy.parse(cfg.single_policy)
    engine = SingleLevelCache(policy, max(1, cfg.total_capacity_blocks), cfg.associativity)
    latency = 0.0
    blocks = 0
    for r in timeline:
        for b, op in to_blocks(r, cfg.block_size):
            hit = engine.access(b, op)
            latency += _single_latency(policy, op, hit, cfg.latency)
            blocks += 1
    st = engine.stats
    n = len(timeline)
    totals = st.to_dict()
    totals.update(
        requests=n,
        block_accesses=blocks,
        ssd_writes_total=st.cache_device_writes,
        mean_latency_us=latency / n if n else 0.0,
        total_hit_ratio=st.hits / blocks if blocks else 0.0,
        read_hits=st.read_hits,
    )
    return {
        "schema": SCHEMA,
        "engine": "single",
        "mode": f"single-{policy.value}",
        "label": cfg.label,
        "block_size": cfg.block_size,
        "requests": n,
        "capacity_blocks": engine.store.capacity,
        "totals": totals,
    }


def run_config(timeline: Sequence[TraceRecord], cfg: RunConfig) -> dict:
    if cfg.engine == "single":
        return run_single(timeline, cfg)
    return run_etica(timeline, cfg)


def simulate(cfg: RunConfig, trace_paths: Sequence[str | os.PathLike]) -> dict:
    report = run_config(load_timeline(trace_paths, cfg), cfg)
    report["config"] = cfg.to_dict()
    return report


def _run_job(args):
    timeline, cfg_dict = args
    cfg = RunConfig.from_dict(cfg_dict)
    return run_config(timeline, cfg)


def _run_many(timeline, cfgs: Sequence[RunConfig], jobs: int) -> list[dict]:
    work = [(timeline, c.to_dict()) for c in cfgs]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_job, work))
    return [_run_job(w) for w in work]


SUMMARY_KEYS = (
    "requests", "total_hit_ratio", "ssd_writes_total", "mean_latency_us",
    "disk_reads", "disk_writes", "promotions", "evictions",
)


def _summary(report: dict) -> dict:
    t = report["totals"]
    row = {"label": report.get("label") or report["mode"], "mode": report["mode"]}
    for k in SUMMARY_KEYS:
        row[k] = t.get(k, 0)
    if report["engine"] == "etica":
        finals = [vm["intervals"][-1]["allocation"] for vm in report["vms"].values()]
        row["dram_blocks"] = sum(a["dram_blocks"] for a in finals)
        row["ssd_blocks"] = sum(a["ssd_blocks"] for a in finals)
    else:
        row["dram_blocks"] = 0
        row["ssd_blocks"] = report["capacity_blocks"]
    return row


def compare(cfgs: Sequence[RunConfig], trace_paths: Sequence, jobs: int = 1) -> dict:
    """Run every config on the same traces; one column per config."""
    if not cfgs:
        raise ValueError("compare needs at least one config")
    fmt = {c.trace_format for c in cfgs}
    maps = {tuple(sorted(c.vm_map.items())) for c in cfgs}
    sizes = {c.block_size for c in cfgs}
    if len(fmt) > 1 or len(maps) > 1 or len(sizes) > 1:
        raise ValueError("configs disagree on the trace set (format, vm_map or block_size)")
    timeline = load_timeline(trace_paths, cfgs[0])
    reports = _run_many(timeline, cfgs, jobs)
    return {"schema": SCHEMA, "kind": "compare", "columns": [_summary(r) for r in reports]}


def interval_sweep(cfg: RunConfig, intervals: Sequence[int], trace_paths: Sequence,
                   jobs: int = 1, timeline=None) -> dict:
    if not intervals:
        raise ValueError("interval list is empty")
    if any(int(i) < 1 for i in intervals):
        raise ValueError("intervals must be positive")
    if timeline is None:
        timeline = load_timeline(trace_paths, cfg)
    cfgs = [cfg.replace(promo_interval_requests=int(i)) for i in intervals]
    reports = _run_many(timeline, cfgs, jobs)
    rows = []
    for i, r in zip(intervals, reports):
        t = r["totals"]
        lat = t["mean_latency_us"]
        rows.append({
            "promo_interval": int(i),
            "mean_latency_us": lat,
            "performance": 1.0 / lat if lat else 0.0,
            "ssd_writes_total": t["ssd_writes_total"],
            "promotions": t["promotions"],
            "total_hit_ratio": t["total_hit_ratio"],
        })
    base = rows[0]["performance"]
    base_writes = rows[0]["ssd_writes_total"]
    for row in rows:
        row["normalized_performance"] = row["performance"] / base if base else 0.0
        row["normalized_ssd_writes"] = row["ssd_writes_total"] / base_writes if base_writes else 0.0
    return {"schema": SCHEMA, "kind": "interval-sweep", "rows": rows}
