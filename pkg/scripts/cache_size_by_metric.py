"""Cache size each reuse-distance metric asks for, per VM and per window.

Compares the demand (max distance + 1) under TRD, URD and the policy-aware
POD_RO / POD_WBWO on the given traces, or on synthetic zipf VMs.

    python3 scripts/cache_size_by_metric.py --window 10000
    python3 scripts/cache_size_by_metric.py --trace traces/ --out sizes.csv
"""
import argparse
import csv
import sys
from collections import defaultdict

from etica.config import RunConfig
from etica.experiments import load_timeline
from etica.partition import demand_from_pod
from etica.reuse import compute_distances
from etica.synth import zipf_timeline
from etica.trace import block_accesses, merge_streams

METRICS = ("trd", "urd", "pod-ro", "pod-wbwo")


def synthetic(n_vms: int, requests: int, seed: int):
    streams = []
    for vm in range(n_vms):
        read_frac = (0.95, 0.7, 0.5, 0.85)[vm % 4]
        streams.append(zipf_timeline(requests, 5000 + 2500 * vm, s=0.8 + 0.1 * vm,
                                     read_frac=read_frac, seed=seed + vm, vm_id=vm))
    return merge_streams(streams)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trace", action="append")
    ap.add_argument("--vms", type=int, default=4)
    ap.add_argument("--requests", type=int, default=50_000)
    ap.add_argument("--window", type=int, default=10_000, help="requests per VM per window")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = RunConfig()
    timeline = load_timeline(args.trace, cfg) if args.trace else synthetic(args.vms, args.requests, args.seed)
    by_vm = defaultdict(list)
    for r in timeline:
        by_vm[r.vm_id].append(r)

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["vm", "window", *(f"{m}_blocks" for m in METRICS), "dram_saving", "ssd_saving"])
    for vm in sorted(by_vm):
        recs = by_vm[vm]
        for k in range(0, len(recs), args.window):
            acc = [(b, op) for b, op in block_accesses(recs[k:k + args.window], cfg.block_size)]
            size = {m: demand_from_pod(compute_distances(acc, m).max_finite) for m in METRICS}
            # each level sized by its own policy-aware metric instead of URD
            urd = size["urd"]
            dram = 1 - size["pod-ro"] / urd if urd else 0.0
            ssd = 1 - size["pod-wbwo"] / urd if urd else 0.0
            w.writerow([vm, k // args.window, *(size[m] for m in METRICS), f"{dram:.4f}", f"{ssd:.4f}"])
    if args.out:
        out.close()


if __name__ == "__main__":
    main()
