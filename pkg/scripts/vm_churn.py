"""Allocation over time while VMs arrive and depart.

VM 0 runs throughout, VM 1 joins a third of the way in, VM 2 stops
issuing requests at two thirds and is marked departed. Prints the per-interval DRAM/SSD allocation of every VM.

    python3 scripts/vm_churn.py --requests 30000 --resize 2000
"""
import argparse
import csv
import sys

from etica.config import RunConfig
from etica.engine import run_etica
from etica.synth import zipf_timeline
from etica.trace import merge_streams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--requests", type=int, default=30_000, help="requests per VM")
    ap.add_argument("--dram", type=int, default=1500)
    ap.add_argument("--ssd", type=int, default=3000)
    ap.add_argument("--resize", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    n = args.requests
    # VM 1 starts late: shift its timestamps past a third of the run
    vm0 = zipf_timeline(n, 6000, read_frac=0.9, seed=args.seed, vm_id=0, start_ts=0)
    vm1 = zipf_timeline(n, 3000, read_frac=0.6, seed=args.seed + 1, vm_id=1, start_ts=n // 3)
    vm2 = zipf_timeline(2 * n // 3, 4000, read_frac=0.8, seed=args.seed + 2, vm_id=2, start_ts=0)
    timeline = merge_streams([vm0, vm1, vm2])
    leave_at = max(i for i, r in enumerate(timeline) if r.vm_id == 2) + 1
    cfg = RunConfig(dram_capacity_blocks=args.dram, ssd_capacity_blocks=args.ssd,
                    resize_interval_requests=args.resize, departures={2: leave_at})
    report = run_etica(timeline, cfg)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["interval", "vm", "requests", "dram_blocks", "ssd_blocks", "hit_ratio", "ssd_writes"])
    for vm, data in report["vms"].items():
        for row in data["intervals"]:
            a = row["allocation"]
            w.writerow([row["interval"], vm, row["requests"], a["dram_blocks"], a["ssd_blocks"],
                        f"{row['total_hit_ratio']:.4f}", row["ssd_writes_total"]])


if __name__ == "__main__":
    main()
