"""Per-block popularity scores and promotion/eviction queue selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable

from .reuse import INFINITE

BYTES_PER_ENTRY = 8


def access_weight(pod, cache_size_blocks: int) -> float:
    """Contribution of one access: exp(-pod / cache size), 0 for cold."""
    if pod is None or pod == INFINITE:
        return 0.0
    return math.exp(-pod / cache_size_blocks)


@dataclass
class PopularityTable:
    """Scores for one VM's blocks. ``decay`` scales every score per interval."""

    scores: dict[Hashable, float] = field(default_factory=dict)
    num_acc: dict[Hashable, int] = field(default_factory=dict)
    decay: float = 1.0

    def update(self, block: Hashable, pod, cache_size_blocks: int) -> float:
        size = max(1, cache_size_blocks)
        score = self.scores.get(block, 0.0) + access_weight(pod, size)
        self.scores[block] = score
        self.num_acc[block] = self.num_acc.get(block, 0) + 1
        return score

    def score(self, block: Hashable) -> float:
        return self.scores.get(block, 0.0)

    def apply_decay(self):
        if self.decay != 1.0:
            for b in self.scores:
                self.scores[b] *= self.decay

    def forget(self, block: Hashable):
        self.scores.pop(block, None)
        self.num_acc.pop(block, None)

    def __len__(self):
        return len(self.scores)

    @property
    def metadata_bytes(self) -> int:
        return BYTES_PER_ENTRY * len(self.scores)

    def rows(self):
        for b in sorted(self.scores, key=_block_order):
            yield b, self.scores[b], self.num_acc.get(b, 0)


def update_popularity(table: PopularityTable, b, pod, cache_size_blocks: int) -> float:
    return table.update(b, pod, cache_size_blocks)


def _block_order(key):
    return (key.vm_id, key.block) if hasattr(key, "block") else key


def _share(fraction: float, n: int) -> int:
    # round first: 0.05 * 60 is 3.0000000000000004 in binary floating point
    return math.ceil(round(fraction * n, 9))


@dataclass
class QueueSet:
    promotion_queue: list = field(default_factory=list)
    eviction_queue: list = field(default_factory=list)


def select_queues(
    table: PopularityTable,
    ssd_resident: Iterable[Hashable],
    disk_resident_accessed: Iterable[Hashable],
    fraction: float = 0.05,
) -> QueueSet:
    """Least popular ``fraction`` of SSD blocks and most popular of disk blocks.

    Both counts round up. Ties go to the lower block number.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    ssd = sorted(ssd_resident, key=_block_order)
    disk = sorted(disk_resident_accessed, key=_block_order)
    n_evict = _share(fraction, len(ssd))
    n_promote = _share(fraction, len(disk))
    # sorted() is stable, so equal scores keep the block order from above
    eviction = sorted(ssd, key=table.score)[:n_evict]
    promotion = sorted(disk, key=lambda b: -table.score(b))[:n_promote]
    return QueueSet(promotion, eviction)
