"""Single-level SSD cache under one write policy (WB, WT, RO, WO)."""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass
from typing import Hashable, Iterable

from .cache import SetAssociativeCache
from .trace import Op


class WritePolicy(enum.Enum):
    WB = "wb"
    WT = "wt"
    RO = "ro"
    WO = "wo"

    @classmethod
    def parse(cls, name: str | "WritePolicy") -> "WritePolicy":
        if isinstance(name, cls):
            return name
        key = name.strip().lower()
        if key == "wbwo":
            return cls.WO
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown write policy {name!r}") from None

    @property
    def allocate_on_read_miss(self) -> bool:
        return self is not WritePolicy.WO

    @property
    def allocate_on_write(self) -> bool:
        return self is not WritePolicy.RO

    @property
    def write_to_backing_immediately(self) -> bool:
        return self in (WritePolicy.WT, WritePolicy.RO)


@dataclass
class SingleLevelStats:
    read_hits: int = 0
    read_misses: int = 0
    write_hits: int = 0
    write_misses: int = 0
    cache_device_writes: int = 0
    backing_reads: int = 0
    backing_writes: int = 0
    read_fills: int = 0
    invalidations: int = 0

    @property
    def reads(self) -> int:
        return self.read_hits + self.read_misses

    @property
    def writes(self) -> int:
        return self.write_hits + self.write_misses

    @property
    def hits(self) -> int:
        return self.read_hits + self.write_hits

    def to_dict(self) -> dict:
        return asdict(self)


class SingleLevelCache:
    """Stateful engine; feed it block accesses one at a time."""

    def __init__(
        self,
        policy: WritePolicy | str,
        capacity_blocks: int,
        associativity: int | None = 512,
    ):
        if capacity_blocks < 1:
            raise ValueError("capacity_blocks must be at least 1")
        self.policy = WritePolicy.parse(policy)
        self.store = SetAssociativeCache(capacity_blocks, associativity)
        self.stats = SingleLevelStats()

    def _fill(self, key, dirty: bool):
        st = self.stats
        victim = self.store.insert(key, dirty)
        st.cache_device_writes += 1
        if victim is not None and victim[1]:
            st.backing_writes += 1

    def read(self, key: Hashable) -> bool:
        st = self.stats
        if key in self.store:
            self.store.touch(key)
            st.read_hits += 1
            return True
        st.read_misses += 1
        st.backing_reads += 1
        if self.policy.allocate_on_read_miss:
            self._fill(key, dirty=False)
            st.read_fills += 1
        return False

    def write(self, key: Hashable) -> bool:
        st = self.stats
        policy = self.policy
        hit = key in self.store
        if hit:
            st.write_hits += 1
        else:
            st.write_misses += 1
        if policy is WritePolicy.RO:
            st.backing_writes += 1
            if hit:
                self.store.remove(key)
                st.invalidations += 1
            return hit
        dirty = policy is not WritePolicy.WT
        if hit:
            self.store.mark_dirty(key, dirty)
            self.store.touch(key)
            st.cache_device_writes += 1
        else:
            self._fill(key, dirty)
        if policy is WritePolicy.WT:
            st.backing_writes += 1
        return hit

    def access(self, key: Hashable, op: Op) -> bool:
        return self.read(key) if op is Op.READ else self.write(key)


def simulate_single_level(
    accesses: Iterable[tuple[Hashable, Op]],
    policy: WritePolicy | str,
    capacity_blocks: int,
    associativity: int | None = 512,
) -> SingleLevelStats:
    engine = SingleLevelCache(policy, capacity_blocks, associativity)
    for key, op in accesses:
        engine.access(key, op)
    return engine.stats
