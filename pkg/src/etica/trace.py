"""Block I/O trace parsing, block decomposition and multi-VM stream merging."""
from __future__ import annotations

import csv
import enum
import gzip
import heapq
import io
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, TextIO

DEFAULT_BLOCK_SIZE = 4096
_MAX_ADDRESS = 2**64


class Op(enum.Enum):
    READ = "R"
    WRITE = "W"

    def __str__(self) -> str:
        return self.value


class TraceError(Exception):
    """Base class for trace input problems."""


class TraceParseError(TraceError):
    def __init__(self, line_no: int, message: str, source: str = "<stream>"):
        self.line_no = line_no
        self.source = source
        super().__init__(f"{source}:{line_no}: {message}")


class UnsortedStreamError(TraceError):
    def __init__(self, stream: int, index: int):
        self.stream = stream
        self.index = index
        super().__init__(
            f"stream {stream} is not timestamp-sorted at record index {index}"
        )


@dataclass(frozen=True)
class TraceRecord:
    timestamp: int
    vm_id: int
    op: Op
    offset: int
    length: int

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"length must be positive, got {self.length}")
        if self.offset < 0:
            raise ValueError(f"offset must be non-negative, got {self.offset}")
        if self.offset + self.length > _MAX_ADDRESS:
            raise ValueError("offset + length overflows the address space")


@dataclass(frozen=True, order=True)
class BlockRef:
    vm_id: int
    block: int


_MSR_OPS = {"read": Op.READ, "write": Op.WRITE}
_SIMPLE_OPS = {"R": Op.READ, "W": Op.WRITE}
FORMATS = ("msr", "simple")


def _int_field(value: str, name: str, line_no: int, source: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise TraceParseError(line_no, f"bad {name} field {value!r}", source) from None


def parse_trace(
    stream: TextIO | Iterable[str],
    fmt: str = "msr",
    vm_id: int = 0,
    source: str = "<stream>",
) -> list[TraceRecord]:
    """Parse a CSV trace into records, in file order.

    ``fmt`` is ``"msr"`` (``Timestamp,Hostname,DiskNumber,Type,Offset,Size,
    ResponseTime``) or ``"simple"`` (``timestamp,op,offset,length``). Every
    record gets ``vm_id``. Blank lines are skipped; anything else that does
    not fit the format raises :class:`TraceParseError` with the line number.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown trace format {fmt!r}")
    n_fields = 7 if fmt == "msr" else 4
    records = []
    for line_no, row in enumerate(csv.reader(stream), start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != n_fields:
            raise TraceParseError(
                line_no, f"expected {n_fields} fields, got {len(row)}", source
            )
        if fmt == "msr":
            ts, _host, _disk, op_s, off, size, _resp = row
            op = _MSR_OPS.get(op_s.strip().lower())
        else:
            ts, op_s, off, size = row
            op = _SIMPLE_OPS.get(op_s.strip().upper())
        if op is None:
            raise TraceParseError(line_no, f"unknown op {op_s.strip()!r}", source)
        timestamp = _int_field(ts, "timestamp", line_no, source)
        offset = _int_field(off, "offset", line_no, source)
        length = _int_field(size, "length", line_no, source)
        try:
            records.append(TraceRecord(timestamp, vm_id, op, offset, length))
        except ValueError as exc:
            raise TraceParseError(line_no, str(exc), source) from None
    return records


def format_record(r: TraceRecord, fmt: str = "msr") -> str:
    if fmt == "msr":
        op = "Read" if r.op is Op.READ else "Write"
        return f"{r.timestamp},vm{r.vm_id},0,{op},{r.offset},{r.length},0"
    if fmt == "simple":
        return f"{r.timestamp},{r.op.value},{r.offset},{r.length}"
    raise ValueError(f"unknown trace format {fmt!r}")


def write_trace(records: Iterable[TraceRecord], stream: TextIO, fmt: str = "msr"):
    for r in records:
        stream.write(format_record(r, fmt))
        stream.write("\n")


def open_text(path: str | os.PathLike) -> TextIO:
    path = os.fspath(path)
    if path.endswith(".gz"):
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


def sniff_format(path: str | os.PathLike) -> str:
    """Guess the format of a trace file from its first non-blank line."""
    with open_text(path) as fh:
        for line in fh:
            if line.strip():
                return "msr" if line.count(",") == 6 else "simple"
    return "simple"


def load_trace(
    path: str | os.PathLike, fmt: str = "auto", vm_id: int = 0
) -> list[TraceRecord]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"trace not found: {path}")
    if fmt == "auto":
        fmt = sniff_format(path)
    with open_text(path) as fh:
        return parse_trace(fh, fmt, vm_id=vm_id, source=os.fspath(path))


def to_blocks(
    r: TraceRecord, block_size: int = DEFAULT_BLOCK_SIZE
) -> list[tuple[BlockRef, Op]]:
    if block_size <= 0 or block_size & (block_size - 1):
        raise ValueError(f"block_size must be a power of two, got {block_size}")
    first = r.offset // block_size
    last = (r.offset + r.length - 1) // block_size
    return [(BlockRef(r.vm_id, b), r.op) for b in range(first, last + 1)]


def block_accesses(
    records: Iterable[TraceRecord], block_size: int = DEFAULT_BLOCK_SIZE
) -> list[tuple[BlockRef, Op]]:
    out = []
    for r in records:
        out.extend(to_blocks(r, block_size))
    return out


def merge_streams(streams: Sequence[Sequence[TraceRecord]]) -> list[TraceRecord]:
    """Merge per-VM record streams into one timeline.

    Ordering is by timestamp, then vm_id, then stream position, then
    within-stream order, so the result does not depend on anything but
    the inputs.
    """
    for s_idx, stream in enumerate(streams):
        for i in range(1, len(stream)):
            if stream[i].timestamp < stream[i - 1].timestamp:
                raise UnsortedStreamError(s_idx, i)

    def keyed(s_idx: int, stream: Sequence[TraceRecord]) -> Iterator:
        for i, r in enumerate(stream):
            yield (r.timestamp, r.vm_id, s_idx, i), r

    merged = heapq.merge(*(keyed(s, st) for s, st in enumerate(streams)))
    return [r for _, r in merged]
