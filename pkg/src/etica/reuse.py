"""Reuse distances (TRD, URD and the policy-aware POD variants) and MRCs.

A distance is the number of distinct "occupying" blocks touched strictly
between an access and the prior access it pairs with. The metrics differ
in which accesses get a distance and which intervening blocks count:

========  ==========================================  ====================
metric    accesses that get a finite distance          blocks that count
========  ==========================================  ====================
TRD       any access with a prior access               all
URD       reads with a prior access (RAR, RAW)          all
POD_RO    reads whose prior access is a read (RAR)      blocks read
POD_WBWO  reads of a block written earlier (RAW and     blocks written
          RAR chains hanging off a write)
POD_WB    same as URD
========  ==========================================  ====================

Reads that do not pair get ``INFINITE``. Writes get no entry at all except
under TRD. Every window starts at the block's previous access, POD_WBWO
included: for a read-after-read of a dirty block only the writes since the
earlier read can have displaced it.
"""
from __future__ import annotations

import enum
import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .ostree import FenwickTree
from .trace import Op

INFINITE = math.inf


class DistanceMetric(enum.Enum):
    TRD = "trd"
    URD = "urd"
    POD_RO = "pod-ro"
    POD_WBWO = "pod-wbwo"
    POD_WB = "pod-wb"

    @classmethod
    def parse(cls, name: str | "DistanceMetric") -> "DistanceMetric":
        if isinstance(name, cls):
            return name
        key = name.strip().lower().replace("_", "-")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown distance metric {name!r}")


class ReuseTracker:
    """Streaming distance computation for one metric.

    Each :meth:`access` call returns the access's distance (an int or
    ``INFINITE``), or ``None`` when the metric does not assign writes a
    distance. O(log N) per access.
    """

    def __init__(self, metric: DistanceMetric | str):
        self.metric = DistanceMetric.parse(metric)
        self._t = 0
        self._last: dict[Hashable, int] = {}
        self._last_op: dict[Hashable, Op] = {}
        self._last_read: dict[Hashable, int] = {}
        self._last_write: dict[Hashable, int] = {}
        m = self.metric
        self._all = FenwickTree() if m in (DistanceMetric.TRD, DistanceMetric.URD, DistanceMetric.POD_WB) else None
        self._reads = FenwickTree() if m is DistanceMetric.POD_RO else None
        self._writes = FenwickTree() if m is DistanceMetric.POD_WBWO else None

    @staticmethod
    def _move(tree: FenwickTree, marks: dict, key, t: int):
        prev = marks.get(key)
        if prev is not None:
            tree.add(prev, -1)
        tree.add(t, 1)
        marks[key] = t

    def access(self, key: Hashable, op: Op):
        t = self._t
        self._t += 1
        m = self.metric
        prev = self._last.get(key)
        is_read = op is Op.READ

        if m is DistanceMetric.TRD:
            dist = INFINITE if prev is None else self._all.range_sum(prev + 1, t)
        elif not is_read:
            dist = None
        elif m is DistanceMetric.URD or m is DistanceMetric.POD_WB:
            dist = INFINITE if prev is None else self._all.range_sum(prev + 1, t)
        elif m is DistanceMetric.POD_RO:
            if prev is None or self._last_op[key] is not Op.READ:
                dist = INFINITE
            else:
                dist = self._reads.range_sum(prev + 1, t)
        else:  # POD_WBWO
            if key not in self._last_write:
                dist = INFINITE
            else:
                dist = self._writes.range_sum(prev + 1, t)

        if self._all is not None:
            self._move(self._all, self._last, key, t)
        else:
            self._last[key] = t
        self._last_op[key] = op
        if is_read and self._reads is not None:
            self._move(self._reads, self._last_read, key, t)
        if not is_read:
            if self._writes is not None:
                self._move(self._writes, self._last_write, key, t)
            else:
                self._last_write[key] = t
        return dist


@dataclass
class DistanceProfile:
    metric: DistanceMetric
    # (access index, block, distance); distance is an int or INFINITE
    entries: list[tuple[int, Hashable, float | int]] = field(default_factory=list)

    @property
    def distances(self) -> list:
        return [d for _, _, d in self.entries]

    @property
    def max_finite(self) -> int | None:
        finite = [d for _, _, d in self.entries if d != INFINITE]
        return max(finite) if finite else None

    @property
    def histogram(self) -> Counter:
        return Counter(d for _, _, d in self.entries)

    def __len__(self):
        return len(self.entries)

    def to_dict(self, per_access: bool = False) -> dict:
        hist = self.histogram
        finite = sorted(k for k in hist if k != INFINITE)
        out = {
            "metric": self.metric.value,
            "accesses": len(self.entries),
            "max": self.max_finite,
            "cold": hist.get(INFINITE, 0),
            "histogram": {str(k): hist[k] for k in finite},
        }
        if per_access:
            out["distances"] = [
                [i, _key_json(b), None if d == INFINITE else d]
                for i, b, d in self.entries
            ]
        return out


def _key_json(key):
    if hasattr(key, "vm_id") and hasattr(key, "block"):
        return [key.vm_id, key.block]
    return key


def compute_distances(
    accesses: Iterable[tuple[Hashable, Op]], metric: DistanceMetric | str
) -> DistanceProfile:
    tracker = ReuseTracker(metric)
    profile = DistanceProfile(tracker.metric)
    for i, (key, op) in enumerate(accesses):
        d = tracker.access(key, op)
        if d is not None:
            profile.entries.append((i, key, d))
    return profile


def max_pod(profile: DistanceProfile) -> int | None:
    return profile.max_finite


@dataclass(frozen=True)
class MRC:
    """Step-function hit-ratio curve: ``H(c)`` for a cache of ``c`` blocks.

    ``sizes`` are the breakpoints (distinct finite distance + 1, ascending)
    and ``hits[k]`` is the hit ratio for any size in
    ``[sizes[k], sizes[k+1])``. Below the first breakpoint H is 0.
    """

    sizes: tuple[int, ...] = ()
    hits: tuple[float, ...] = ()

    def __call__(self, c: float) -> float:
        k = bisect_right(self.sizes, c)
        return self.hits[k - 1] if k else 0.0

    @property
    def max_hit(self) -> float:
        return self.hits[-1] if self.hits else 0.0

    def to_dict(self) -> dict:
        return {"sizes": list(self.sizes), "hits": list(self.hits)}

    @classmethod
    def from_dict(cls, d: dict) -> "MRC":
        sizes = tuple(int(s) for s in d.get("sizes", ()))
        hits = tuple(float(h) for h in d.get("hits", ()))
        if len(sizes) != len(hits):
            raise ValueError("MRC sizes and hits differ in length")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("MRC sizes must be strictly increasing")
        return cls(sizes, hits)


def build_mrc(profile: DistanceProfile | Sequence, total_requests: int) -> MRC:
    """Hit ratio of a fully-associative LRU-like cache per size.

    ``profile`` may also be a bare sequence of distances.
    """
    if total_requests <= 0:
        raise ValueError("total_requests must be positive")
    dists = profile.distances if isinstance(profile, DistanceProfile) else list(profile)
    hist = Counter(d for d in dists if d != INFINITE)
    if len(dists) > total_requests:
        raise ValueError("more qualifying accesses than total_requests")
    sizes, hits, running = [], [], 0
    for d in sorted(hist):
        running += hist[d]
        sizes.append(int(d) + 1)
        hits.append(running / total_requests)
    return MRC(tuple(sizes), tuple(hits))
