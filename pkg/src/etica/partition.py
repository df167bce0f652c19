"""Per-VM cache sizing and performance-per-cost (PPC) partitioning."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .reuse import MRC, DistanceMetric, build_mrc, compute_distances
from .trace import Op

EXHAUSTIVE_LIMIT = 10**6
LEVELS = ("dram", "ssd")


def demand_from_pod(pod_max: int | None) -> int:
    """Blocks needed so the largest observed distance still hits."""
    return 0 if pod_max is None else int(pod_max) + 1


@dataclass
class VmDemand:
    pod_ro_max: int | None = None
    pod_wbwo_max: int | None = None
    mrc_ro: MRC = field(default_factory=MRC)
    mrc_wbwo: MRC = field(default_factory=MRC)

    def demand_blocks(self, level: str) -> int:
        if level == "dram":
            return demand_from_pod(self.pod_ro_max)
        if level == "ssd":
            return demand_from_pod(self.pod_wbwo_max)
        raise ValueError(f"unknown level {level!r}")

    def mrc(self, level: str) -> MRC:
        return self.mrc_ro if level == "dram" else self.mrc_wbwo

    def to_dict(self) -> dict:
        return {
            "pod_ro_max": self.pod_ro_max,
            "pod_wbwo_max": self.pod_wbwo_max,
            "mrc_ro": self.mrc_ro.to_dict(),
            "mrc_wbwo": self.mrc_wbwo.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "VmDemand":
        def opt_int(v):
            return None if v is None else int(v)

        return cls(
            opt_int(d.get("pod_ro_max")),
            opt_int(d.get("pod_wbwo_max")),
            MRC.from_dict(d.get("mrc_ro", {})),
            MRC.from_dict(d.get("mrc_wbwo", {})),
        )


def demand_from_accesses(accesses: Sequence[tuple[Hashable, Op]]) -> VmDemand:
    """RO (DRAM) and WBWO (SSD) demand of one VM's access window."""
    if not accesses:
        return VmDemand()
    total = len(accesses)
    ro = compute_distances(accesses, DistanceMetric.POD_RO)
    wbwo = compute_distances(accesses, DistanceMetric.POD_WBWO)
    return VmDemand(
        ro.max_finite, wbwo.max_finite, build_mrc(ro, total), build_mrc(wbwo, total)
    )


@dataclass
class AllocationPlan:
    interval: int = 0
    dram: dict = field(default_factory=dict)
    ssd: dict = field(default_factory=dict)

    def level(self, name: str) -> dict:
        return self.dram if name == "dram" else self.ssd

    def get(self, vm) -> tuple[int, int]:
        return self.dram.get(vm, 0), self.ssd.get(vm, 0)

    def to_dict(self) -> dict:
        return {
            "interval": self.interval,
            "vms": {
                str(vm): {"dram_blocks": self.dram.get(vm, 0), "ssd_blocks": self.ssd.get(vm, 0)}
                for vm in sorted(set(self.dram) | set(self.ssd))
            },
        }


def ppc(allocations: Mapping, mrcs: Mapping) -> float:
    """Sum over VMs of H(c) / c. Every VM passed in must have c >= 1."""
    terms = []
    for vm, c in allocations.items():
        if c <= 0:
            raise ZeroDivisionError(f"VM {vm} has allocation {c}; filter it out first")
        terms.append(mrcs[vm](c) / c)
    return math.fsum(terms)


def _ppc_terms(vms, alloc, mrcs) -> float:
    return math.fsum(mrcs[vm](c) / c for vm, c in zip(vms, alloc) if c > 0)


def candidate_sizes(mrc: MRC, demand: int, min_alloc: int = 1) -> list[int]:
    """0 plus the MRC breakpoints clipped into [min_alloc, demand]."""
    if demand <= 0:
        return [0]
    sizes = {min(max(s, min_alloc), demand) for s in mrc.sizes}
    if not sizes:
        sizes = {demand}
    return [0] + sorted(sizes)


def _exhaustive(vms, cands, mrcs, capacity) -> tuple:
    val = np.zeros(1)
    cost = np.zeros(1, dtype=np.int64)
    for vm, cs in zip(vms, cands):
        v = np.array([mrcs[vm](c) / c if c else 0.0 for c in cs])
        val = np.add.outer(val, v).ravel()
        cost = np.add.outer(cost, np.array(cs, dtype=np.int64)).ravel()
    feasible = cost <= capacity
    best = val[feasible].max()
    # numpy's summation order can differ from fsum by an ulp; settle near-ties
    # exactly, scanning in lexicographic order so the first maximum wins
    tol = 1e-9 * max(1.0, abs(best))
    near = np.flatnonzero(feasible & (val >= best - tol))
    shape = [len(cs) for cs in cands]
    best_alloc, best_val = None, -1.0
    for flat in near:
        idx = np.unravel_index(flat, shape)
        alloc = tuple(cs[i] for cs, i in zip(cands, idx))
        p = _ppc_terms(vms, alloc, mrcs)
        if p > best_val:
            best_alloc, best_val = alloc, p
    return best_alloc


def _hill_climb(vms, cands, demands, mrcs, capacity) -> tuple:
    total = sum(demands)
    alloc = []
    for cs, d in zip(cands, demands):
        target = d * capacity / total
        alloc.append(max(c for c in cs if c <= target))
    used = sum(alloc)
    current = _ppc_terms(vms, alloc, mrcs)
    while True:
        best_move, best_val = None, current
        for i, cs in enumerate(cands):
            for c in cs:
                if c == alloc[i] or used - alloc[i] + c > capacity:
                    continue
                trial = alloc[:i] + [c] + alloc[i + 1:]
                p = _ppc_terms(vms, trial, mrcs)
                if p > best_val:
                    best_move, best_val = (i, c), p
        if best_move is None:
            return tuple(alloc)
        i, c = best_move
        used += c - alloc[i]
        alloc[i] = c
        current = best_val


def solve_level(demands: Mapping, mrcs: Mapping, capacity: int, min_alloc: int = 1) -> dict:
    """Allocate one cache level. Returns ``{vm: blocks}`` for every VM given."""
    vms = sorted(demands)
    if sum(demands[vm] for vm in vms) <= capacity:
        return {vm: int(demands[vm]) for vm in vms}
    active = [vm for vm in vms if demands[vm] > 0]
    cands = [candidate_sizes(mrcs[vm], demands[vm], min_alloc) for vm in active]
    combos = math.prod(len(c) for c in cands)
    if combos <= EXHAUSTIVE_LIMIT:
        alloc = _exhaustive(active, cands, mrcs, capacity)
    else:
        alloc = _hill_climb(active, cands, [demands[vm] for vm in active], mrcs, capacity)
    out = {vm: 0 for vm in vms}
    out.update(zip(active, (int(c) for c in alloc)))
    return out


def optimize_partition(
    demands: Mapping[Hashable, VmDemand],
    dram_capacity: int,
    ssd_capacity: int,
    interval: int = 0,
    min_alloc: int = 1,
) -> AllocationPlan:
    if dram_capacity < 0 or ssd_capacity < 0:
        raise ValueError("capacities must be non-negative")
    plan = AllocationPlan(interval)
    for level, cap in (("dram", dram_capacity), ("ssd", ssd_capacity)):
        level_demand = {vm: d.demand_blocks(level) for vm, d in demands.items()}
        level_mrc = {vm: d.mrc(level) for vm, d in demands.items()}
        plan.level(level).update(solve_level(level_demand, level_mrc, cap, min_alloc))
    return plan
