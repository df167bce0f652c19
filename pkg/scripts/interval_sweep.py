"""Sensitivity to the promotion/eviction interval.

Normalized performance (1 / mean latency) and SSD writes for each interval,
relative to the first one.

    python3 scripts/interval_sweep.py --intervals 100,1000,10000 --jobs 3
"""
import argparse
import csv
import sys

from etica.config import RunConfig
from etica.experiments import interval_sweep
from etica.synth import zipf_timeline


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--intervals", default="100,300,1000,3000,10000")
    ap.add_argument("--trace", action="append")
    ap.add_argument("--dram", type=int, default=3000)
    ap.add_argument("--ssd", type=int, default=1000)
    ap.add_argument("--requests", type=int, default=100_000)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = RunConfig(dram_capacity_blocks=args.dram, ssd_capacity_blocks=args.ssd)
    intervals = [int(x) for x in args.intervals.split(",")]
    timeline = None if args.trace else zipf_timeline(args.requests, 10_000, read_frac=0.9, seed=args.seed)
    result = interval_sweep(cfg, intervals, args.trace or [], jobs=args.jobs, timeline=timeline)
    w = csv.DictWriter(sys.stdout, fieldnames=list(result["rows"][0]), lineterminator="\n")
    w.writeheader()
    w.writerows(result["rows"])


if __name__ == "__main__":
    main()
