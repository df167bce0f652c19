"""SSD writes, hit ratio and latency: two-level cache vs single-level SSD caches.

Runs the two-level engine (with and without promotion/eviction) next to
single-level WB, WT and RO caches of the same total capacity.

    python3 scripts/endurance_comparison.py --dram 3000 --ssd 1000
"""
import argparse
import json

from etica.config import RunConfig
from etica.experiments import _summary, load_timeline, run_config
from etica.synth import zipf_timeline


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trace", action="append")
    ap.add_argument("--dram", type=int, default=3000)
    ap.add_argument("--ssd", type=int, default=1000)
    ap.add_argument("--requests", type=int, default=100_000)
    ap.add_argument("--blocks", type=int, default=10_000)
    ap.add_argument("--read-frac", type=float, default=0.92)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    base = RunConfig(dram_capacity_blocks=args.dram, ssd_capacity_blocks=args.ssd)
    if args.trace:
        timeline = load_timeline(args.trace, base)
    else:
        timeline = zipf_timeline(args.requests, args.blocks, read_frac=args.read_frac, seed=args.seed)
    cfgs = [
        base.replace(label="two-level"),
        base.replace(label="two-level-npe", promotion_eviction=False),
        *(base.replace(label=f"single-{p}", engine="single", single_policy=p) for p in ("wb", "wt", "ro")),
    ]
    rows = [_summary(run_config(timeline, c)) for c in cfgs]
    ref = rows[2]
    for r in rows:
        r["ssd_writes_vs_wb"] = r["ssd_writes_total"] / ref["ssd_writes_total"] if ref["ssd_writes_total"] else 0.0
        r["latency_vs_wb"] = r["mean_latency_us"] / ref["mean_latency_us"] if ref["mean_latency_us"] else 0.0
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
