"""Synthetic workloads for experiments and tests."""
from __future__ import annotations

import os

import numpy as np

from .trace import Op, TraceRecord, write_trace


def zipf_timeline(
    n_requests: int,
    n_blocks: int,
    s: float = 1.0,
    read_frac: float = 0.9,
    seed: int = 0,
    vm_id: int = 0,
    block_size: int = 4096,
    start_ts: int = 0,
) -> list[TraceRecord]:
    """Single-block requests over a bounded zipf(s) popularity law.

    Popularity ranks are scattered over the address space with a fixed
    permutation so hot blocks do not all share one cache set.
    """
    rng = np.random.default_rng(seed)
    weights = 1.0 / np.arange(1, n_blocks + 1, dtype=float) ** s
    ranks = rng.choice(n_blocks, size=n_requests, p=weights / weights.sum())
    addr = rng.permutation(n_blocks)[ranks]
    reads = rng.random(n_requests) < read_frac
    return [
        TraceRecord(start_ts + i, vm_id, Op.READ if r else Op.WRITE, int(a) * block_size, block_size)
        for i, (a, r) in enumerate(zip(addr.tolist(), reads.tolist()))
    ]


def write_msr(records, path: str | os.PathLike):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_trace(records, fh, "msr")
