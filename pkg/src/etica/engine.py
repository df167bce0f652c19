"""Two-level DRAM (read-only) + SSD (write-back, write-only) cache engine.

Reads go DRAM -> SSD -> disk and are staged in DRAM; they never fill the
SSD. Writes bypass DRAM (invalidating any DRAM copy) and are absorbed by
the SSD only when the block is already resident there. The SSD is
populated by periodic promotion of popular disk blocks and trimmed by
eviction of unpopular ones.

With promotion/eviction switched off ("NPE" mode) the SSD acts as a plain
LRU write-allocate cache instead, otherwise it would never fill.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

from .cache import SetAssociativeCache
from .config import RunConfig
from .metrics import Counters, ServicePath, assemble_report, request_latency
from .partition import AllocationPlan, demand_from_accesses, optimize_partition
from .popularity import PopularityTable, QueueSet, select_queues
from .reuse import DistanceMetric, ReuseTracker
from .trace import Op, TraceRecord, to_blocks

log = logging.getLogger(__name__)


class Outcome(enum.Enum):
    DRAM_HIT = "DramHit"
    SSD_HIT = "SsdHit"
    MISS = "Miss"


class InvariantViolation(AssertionError):
    pass


class VmCacheState:
    """One VM's two cache levels; the pair of stores is the block map."""

    def __init__(self, dram_blocks: int, ssd_blocks: int, associativity: int = 512,
                 write_allocate: bool = False):
        self.dram = SetAssociativeCache(dram_blocks, associativity)
        self.ssd = SetAssociativeCache(ssd_blocks, associativity)
        self.write_allocate = write_allocate

    def level_of(self, b) -> set[str]:
        where = set()
        if b in self.dram:
            where.add("dram")
        if b in self.ssd:
            where.add("ssd")
        return where

    def _stage_in_dram(self, b, c: Counters) -> bool:
        if self.dram.capacity == 0:
            return False
        # DRAM victims are clean by construction: drop them
        self.dram.insert(b, dirty=False)
        c.dram_fills += 1
        return True

    def handle_read(self, b, c: Counters) -> tuple[Outcome, ServicePath, bool]:
        c.reads += 1
        if b in self.dram:
            self.dram.touch(b)
            c.dram_hits += 1
            return Outcome.DRAM_HIT, ServicePath.DRAM_HIT, False
        if b in self.ssd:
            self.ssd.touch(b)
            c.ssd_read_hits += 1
            filled = self._stage_in_dram(b, c)
            return Outcome.SSD_HIT, ServicePath.SSD_READ_HIT, filled
        c.read_misses += 1
        c.disk_reads += 1
        filled = self._stage_in_dram(b, c)
        return Outcome.MISS, ServicePath.READ_MISS, filled

    def handle_write(self, b, c: Counters) -> tuple[Outcome, ServicePath]:
        c.writes += 1
        self.dram.discard(b)
        if b in self.ssd:
            self.ssd.mark_dirty(b)
            self.ssd.touch(b)
            c.ssd_write_hits += 1
            c.ssd_writes_total += 1
            return Outcome.SSD_HIT, ServicePath.SSD_WRITE_HIT
        c.write_misses += 1
        if self.write_allocate and self.ssd.capacity > 0:
            victim = self.ssd.insert(b, dirty=True)
            c.ssd_writes_total += 1
            c.ssd_write_fills += 1
            if victim is not None:
                self._evicted(victim[1], c)
            return Outcome.MISS, ServicePath.SSD_WRITE_FILL
        c.disk_writes += 1
        return Outcome.MISS, ServicePath.WRITE_MISS

    @staticmethod
    def _evicted(dirty: bool, c: Counters, queued: bool = False):
        # ``evictions`` counts the eviction queue only; LRU, resize and
        # departure removals are displacements
        if queued:
            c.evictions += 1
        else:
            c.ssd_displacements += 1
        if dirty:
            c.disk_writes += 1
            c.flushes += 1

    def apply_queues(self, q: QueueSet, c: Counters):
        """Evict, then promote while there is room. Nothing is displaced."""
        for b in q.eviction_queue:
            if b in self.ssd:
                self._evicted(self.ssd.remove(b), c, queued=True)
        for b in q.promotion_queue:
            if self.ssd.free() == 0:
                break
            if b in self.ssd or not self.ssd.has_room(b):
                continue
            self.ssd.insert(b, dirty=False)
            c.disk_reads += 1
            c.ssd_writes_total += 1
            c.promotions += 1

    def resize(self, dram_blocks: int, ssd_blocks: int, c: Counters, ssd_rank=None):
        self.dram.resize(dram_blocks)
        rank = ssd_rank or self.ssd.last_use
        for _, dirty in self.ssd.resize(ssd_blocks, keep_rank=rank):
            self._evicted(dirty, c)

    def flush_all(self, c: Counters):
        self.resize(0, 0, c)

    def check(self):
        if self.dram.dirty_count():
            raise InvariantViolation("dirty block resident in DRAM")
        if len(self.dram) > self.dram.capacity or len(self.ssd) > self.ssd.capacity:
            raise InvariantViolation("occupancy exceeds allocation")


def handle_read(state: VmCacheState, b, counters: Counters) -> Outcome:
    return state.handle_read(b, counters)[0]


def handle_write(state: VmCacheState, b, counters: Counters) -> Outcome:
    return state.handle_write(b, counters)[0]


def apply_queues(state: VmCacheState, q: QueueSet, counters: Counters):
    state.apply_queues(q, counters)


@dataclass
class _Vm:
    vm_id: int
    cache: VmCacheState
    table: PopularityTable
    tracker: ReuseTracker
    intervals: list = field(default_factory=list)
    allocations: list = field(default_factory=list)
    pending: list = field(default_factory=list)
    accessed: set = field(default_factory=set)
    window: list = field(default_factory=list)
    promo_count: int = 0
    departed: bool = False

    @property
    def counters(self) -> Counters:
        return self.intervals[-1]


class EticaEngine:
    def __init__(self, config: RunConfig):
        self.cfg = config
        self.vms: dict[int, _Vm] = {}
        self.plans: list[AllocationPlan] = []
        self._initial: dict[int, tuple[int, int]] = {}
        self._interval = 0
        self._requests = 0

    # -- setup -------------------------------------------------------------

    def _initial_plan(self, timeline: Sequence[TraceRecord]):
        cfg = self.cfg
        if cfg.initial_split == "zero":
            return
        horizon = len(timeline) if not cfg.partitioning else cfg.resize_interval_requests
        vms = sorted({r.vm_id for r in timeline[:horizon]})
        if not vms:
            return
        n = len(vms)
        dq, dr = divmod(cfg.dram_capacity_blocks, n)
        sq, sr = divmod(cfg.ssd_capacity_blocks, n)
        for i, vm in enumerate(vms):
            self._initial[vm] = (dq + (i < dr), sq + (i < sr))
        self.plans.append(AllocationPlan(
            0, {vm: a[0] for vm, a in self._initial.items()},
            {vm: a[1] for vm, a in self._initial.items()},
        ))

    def _vm(self, vm_id: int) -> _Vm:
        st = self.vms.get(vm_id)
        if st is not None:
            return st
        dram, ssd = self._initial.pop(vm_id, (0, 0))
        cache = VmCacheState(dram, ssd, self.cfg.associativity,
                             write_allocate=not self.cfg.promotion_eviction)
        st = _Vm(vm_id, cache, PopularityTable(decay=self.cfg.popularity_decay),
                 ReuseTracker(DistanceMetric.POD_WBWO))
        for _ in range(self._interval):
            st.intervals.append(Counters())
            st.allocations.append((0, 0))
        st.intervals.append(Counters())
        st.allocations.append((dram, ssd))
        self.vms[vm_id] = st
        log.debug("vm %d arrives at interval %d with (%d, %d)", vm_id, self._interval, dram, ssd)
        return st

    # -- per-request path ----------------------------------------------------

    def _serve(self, st: _Vm, r: TraceRecord):
        cfg = self.cfg
        c = st.counters
        c.requests += 1
        latency = 0.0
        full = cfg.promotion_eviction
        for b, op in to_blocks(r, cfg.block_size):
            c.block_accesses += 1
            if op is Op.READ:
                _, path, filled = st.cache.handle_read(b, c)
                latency += request_latency(path, cfg.latency, dram_fill=filled)
            else:
                _, path = st.cache.handle_write(b, c)
                latency += request_latency(path, cfg.latency)
            if full:
                st.pending.append((b, st.tracker.access(b, op)))
                st.accessed.add(b)
            if cfg.partitioning:
                st.window.append((b, op))
        c.latency_us += latency
        if cfg.check_invariants:
            st.cache.check()
            if r.op is Op.WRITE:
                for b, _ in to_blocks(r, cfg.block_size):
                    if b in st.cache.dram:
                        raise InvariantViolation(f"stale DRAM copy of {b} after write")

    def _promotion_round(self, st: _Vm):
        cfg = self.cfg
        table = st.table
        table.apply_decay()
        size = max(1, st.cache.ssd.capacity)
        for b, pod in st.pending:
            table.update(b, pod, size)
        st.pending.clear()
        ssd = st.cache.ssd
        candidates = [b for b in st.accessed if b not in ssd]
        q = select_queues(table, list(ssd), candidates, cfg.queue_fraction)
        st.cache.apply_queues(q, st.counters)
        st.accessed.clear()

    def _ssd_rank(self, st: _Vm):
        table, ssd = st.table, st.cache.ssd
        return lambda b: (table.score(b), ssd.last_use(b))

    def _depart(self, vm_id: int):
        st = self._vm(vm_id)
        if st.departed:
            return
        st.cache.flush_all(st.counters)
        st.departed = True
        st.window.clear()
        st.pending.clear()
        st.accessed.clear()
        st.allocations[-1] = (0, 0)
        log.debug("vm %d departs after %d requests", vm_id, self._requests)

    def _close_interval(self, resize: bool):
        cfg = self.cfg
        self._interval += 1
        plan = None
        if resize and cfg.partitioning:
            live = {vm: st for vm, st in self.vms.items() if not st.departed}
            demands = {vm: demand_from_accesses(st.window) for vm, st in live.items()}
            plan = optimize_partition(demands, cfg.dram_capacity_blocks,
                                      cfg.ssd_capacity_blocks, interval=self._interval)
            self.plans.append(plan)
        for vm, st in self.vms.items():
            st.intervals.append(Counters())
            st.window.clear()
            if plan is not None and not st.departed:
                dram, ssd = plan.get(vm)
                st.cache.resize(dram, ssd, st.counters, ssd_rank=self._ssd_rank(st))
            st.allocations.append((st.cache.dram.capacity, st.cache.ssd.capacity))

    # -- driver ---------------------------------------------------------------

    def run(self, timeline: Sequence[TraceRecord]) -> dict:
        cfg = self.cfg
        self._initial_plan(timeline)
        departures = sorted((idx, vm) for vm, idx in cfg.departures.items())
        d_next = 0
        for r in timeline:
            while d_next < len(departures) and departures[d_next][0] <= self._requests:
                self._depart(departures[d_next][1])
                d_next += 1
            st = self._vm(r.vm_id)
            self._serve(st, r)
            self._requests += 1
            st.promo_count += 1
            if cfg.promotion_eviction and not st.departed and \
                    st.promo_count % cfg.promo_interval_requests == 0:
                self._promotion_round(st)
            if self._requests % cfg.resize_interval_requests == 0 and self._requests < len(timeline):
                self._close_interval(resize=True)
        while d_next < len(departures) and departures[d_next][0] <= self._requests:
            self._depart(departures[d_next][1])
            d_next += 1
        return self.report()

    def report(self) -> dict:
        extra = {
            vm: {
                "popularity_metadata_bytes": st.table.metadata_bytes,
                "departed": st.departed,
                "dirty_ssd_blocks": st.cache.ssd.dirty_count(),
            }
            for vm, st in self.vms.items()
        }
        meta = {
            "engine": "etica",
            "mode": "NPE" if not self.cfg.promotion_eviction else "Full",
            "label": self.cfg.label,
            "block_size": self.cfg.block_size,
            "requests": self._requests,
            "intervals": self._interval + (1 if self.vms else 0),
            "plans": [p.to_dict() for p in self.plans],
        }
        return assemble_report(
            {vm: st.intervals for vm, st in self.vms.items()},
            {vm: st.allocations for vm, st in self.vms.items()},
            meta,
            extra,
        )


def run_etica(timeline: Sequence[TraceRecord], config: RunConfig) -> dict:
    return EticaEngine(config).run(timeline)
