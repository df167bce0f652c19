import random

import pytest

from etica.trace import BlockRef, Op, TraceRecord

R, W = Op.READ, Op.WRITE

# Small hand-checkable request sequences, as (op, sector) pairs.
# WRITE_MIX: single-level WB vs the two-level cache; RAW_MIX and RAR_MIX
# separate URD from the write-only and read-only distances.
WRITE_MIX = [(R, 1), (R, 2), (R, 3), (W, 1), (W, 4), (R, 1), (R, 4)]
RAW_MIX = [(R, 1), (R, 2), (R, 3), (W, 4), (W, 5), (R, 1), (R, 4)]
RAR_MIX = [(W, 1), (R, 2), (R, 3), (W, 4), (W, 5), (R, 3), (R, 1)]


def accesses(seq, vm=0):
    return [(BlockRef(vm, b), op) for op, b in seq]


def records(seq, vm=0, block_size=4096):
    return [TraceRecord(i, vm, op, b * block_size, block_size) for i, (op, b) in enumerate(seq)]


def random_accesses(rng: random.Random, max_len=300, max_blocks=64, read_frac=None):
    n = rng.randint(0, max_len)
    nb = rng.randint(1, max_blocks)
    p = rng.random() if read_frac is None else read_frac
    return [(BlockRef(0, rng.randrange(nb)), R if rng.random() < p else W) for _ in range(n)]


@pytest.fixture
def rng():
    return random.Random(20240601)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
