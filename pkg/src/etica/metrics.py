"""Device-op counters, latency model and run report assembly."""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import asdict, dataclass, fields

SCHEMA = "etica.report/1"


class ReportConsistencyError(AssertionError):
    """A counter identity does not hold; the simulation is broken."""


@dataclass(frozen=True)
class LatencyConfig:
    dram_read_us: float = 1.0
    dram_write_us: float = 1.0
    ssd_read_us: float = 100.0
    ssd_write_us: float = 300.0
    hdd_read_us: float = 5000.0
    hdd_write_us: float = 5000.0

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be positive")

    def scaled(self, k: float) -> "LatencyConfig":
        return LatencyConfig(**{f.name: getattr(self, f.name) * k for f in fields(self)})

    def to_dict(self) -> dict:
        return asdict(self)


class ServicePath(enum.Enum):
    DRAM_HIT = "DramHit"
    SSD_READ_HIT = "SsdReadHit"
    SSD_WRITE_HIT = "SsdWriteHit"
    READ_MISS = "ReadMiss"
    WRITE_MISS = "WriteMiss"
    # write miss absorbed by the SSD (write-allocate mode only)
    SSD_WRITE_FILL = "SsdWriteFill"


def request_latency(path: ServicePath, cfg: LatencyConfig, dram_fill: bool = True) -> float:
    """Service time of one block access on the request path.

    ``dram_fill`` is False when the VM has no DRAM allocation and read data is
    not staged in DRAM.
    """
    fill = cfg.dram_write_us if dram_fill else 0.0
    if path is ServicePath.DRAM_HIT:
        return cfg.dram_read_us
    if path is ServicePath.SSD_READ_HIT:
        return cfg.ssd_read_us + fill
    if path is ServicePath.SSD_WRITE_HIT or path is ServicePath.SSD_WRITE_FILL:
        return cfg.ssd_write_us
    if path is ServicePath.READ_MISS:
        return cfg.hdd_read_us + fill
    if path is ServicePath.WRITE_MISS:
        return cfg.hdd_write_us
    raise ValueError(path)


@dataclass
class Counters:
    requests: int = 0
    block_accesses: int = 0
    reads: int = 0
    writes: int = 0
    dram_hits: int = 0
    ssd_read_hits: int = 0
    ssd_write_hits: int = 0
    read_misses: int = 0
    write_misses: int = 0
    dram_fills: int = 0
    disk_reads: int = 0
    disk_writes: int = 0
    ssd_writes_total: int = 0
    ssd_write_fills: int = 0
    promotions: int = 0
    evictions: int = 0
    ssd_displacements: int = 0
    flushes: int = 0
    latency_us: float = 0.0

    @property
    def misses(self) -> int:
        return self.read_misses + self.write_misses

    @property
    def hits(self) -> int:
        return self.dram_hits + self.ssd_read_hits + self.ssd_write_hits

    def add(self, other: "Counters"):
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def summary(self) -> dict:
        out = asdict(self)
        out["misses"] = self.misses
        out["mean_latency_us"] = self.latency_us / self.requests if self.requests else 0.0
        out["total_hit_ratio"] = self.hits / self.block_accesses if self.block_accesses else 0.0
        return out


def check_counters(c: Counters, where: str = ""):
    """Raise ReportConsistencyError unless every identity holds."""
    problems = []
    if c.ssd_writes_total != c.ssd_write_hits + c.ssd_write_fills + c.promotions:
        problems.append(
            f"ssd_writes_total={c.ssd_writes_total} != ssd_write_hits={c.ssd_write_hits}"
            f" + ssd_write_fills={c.ssd_write_fills} + promotions={c.promotions}"
        )
    if c.hits + c.misses != c.block_accesses:
        problems.append(f"hits+misses={c.hits + c.misses} != block_accesses={c.block_accesses}")
    if c.reads + c.writes != c.block_accesses:
        problems.append("reads+writes != block_accesses")
    if c.dram_hits + c.ssd_read_hits + c.read_misses != c.reads:
        problems.append("read outcomes do not sum to reads")
    if c.ssd_write_hits + c.write_misses != c.writes:
        problems.append("write outcomes do not sum to writes")
    for f in fields(c):
        if getattr(c, f.name) < 0:
            problems.append(f"{f.name} is negative")
    if problems:
        raise ReportConsistencyError(f"{where}: " + "; ".join(problems))


def assemble_report(
    intervals: dict,
    allocations: dict,
    meta: dict | None = None,
    extra_vm: dict | None = None,
) -> dict:
    """Build the JSON-serialisable report.

    ``intervals`` maps vm -> list of per-interval Counters; ``allocations``
    maps vm -> list of ``(dram_blocks, ssd_blocks)`` snapshots aligned with
    the intervals. Totals are sums of the interval values.
    """
    grand = Counters()
    vms_out = {}
    for vm in sorted(intervals):
        total = Counters()
        rows = []
        for idx, c in enumerate(intervals[vm]):
            check_counters(c, f"vm {vm} interval {idx}")
            total.add(c)
            row = {"interval": idx, **c.summary()}
            dram, ssd = allocations[vm][idx]
            row["allocation"] = {"dram_blocks": dram, "ssd_blocks": ssd}
            rows.append(row)
        check_counters(total, f"vm {vm} totals")
        grand.add(total)
        vm_out = {"intervals": rows, "totals": total.summary()}
        if extra_vm and vm in extra_vm:
            vm_out.update(extra_vm[vm])
        vms_out[str(vm)] = vm_out
    check_counters(grand, "run totals")
    report = {"schema": SCHEMA}
    report.update(meta or {})
    report["vms"] = vms_out
    report["totals"] = grand.summary()
    return report


CSV_COLUMNS = (
    "vm", "interval", "requests", "block_accesses", "dram_hits", "ssd_read_hits",
    "ssd_write_hits", "misses", "disk_reads", "disk_writes", "ssd_writes_total",
    "promotions", "evictions", "mean_latency_us", "total_hit_ratio",
    "dram_blocks", "ssd_blocks",
)


def report_to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for vm, data in report["vms"].items():
        for row in data["intervals"]:
            flat = dict(row, vm=vm, **row["allocation"])
            w.writerow([flat[c] for c in CSV_COLUMNS])
    return buf.getvalue()
