"""Set-associative LRU block store (metadata only)."""
from __future__ import annotations

from collections import OrderedDict
from typing import Callable, Hashable, Iterator


def _set_key(key) -> int:
    return key.block if hasattr(key, "block") else hash(key)


class SetAssociativeCache:
    """Blocks map to ``block mod num_sets``; LRU order inside each set.

    ``associativity`` of 0 or None means fully associative (one set).
    Capacity that is not a multiple of the associativity is spread over
    ``ceil(capacity / associativity)`` sets, the first few holding one extra
    block. Each entry carries a dirty bit.
    """

    def __init__(self, capacity: int, associativity: int | None = 512):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.associativity = associativity or 0
        self._stamp: dict[Hashable, int] = {}
        self._clock = 0
        self._layout(capacity)

    def _layout(self, capacity: int):
        self.capacity = capacity
        if capacity == 0:
            n = 0
        elif not self.associativity:
            n = 1
        else:
            n = -(-capacity // self.associativity)
        self._sets: list[OrderedDict] = [OrderedDict() for _ in range(n)]
        base, extra = divmod(capacity, n) if n else (0, 0)
        self._limits = [base + (1 if i < extra else 0) for i in range(n)]
        self._size = 0

    @property
    def num_sets(self) -> int:
        return len(self._sets)

    def _set_of(self, key) -> int:
        return _set_key(key) % len(self._sets)

    def __len__(self):
        return self._size

    def __contains__(self, key):
        return bool(self._sets) and key in self._sets[self._set_of(key)]

    def __iter__(self) -> Iterator:
        for s in self._sets:
            yield from s

    def items(self):
        for s in self._sets:
            yield from s.items()

    def is_dirty(self, key) -> bool:
        return self._sets[self._set_of(key)][key]

    def dirty_count(self) -> int:
        return sum(1 for _, d in self.items() if d)

    def free(self) -> int:
        return self.capacity - self._size

    def has_room(self, key) -> bool:
        if not self._sets:
            return False
        i = self._set_of(key)
        return len(self._sets[i]) < self._limits[i]

    def _tick(self, key):
        self._clock += 1
        self._stamp[key] = self._clock

    def touch(self, key):
        self._sets[self._set_of(key)].move_to_end(key)
        self._tick(key)

    def mark_dirty(self, key, dirty: bool = True):
        self._sets[self._set_of(key)][key] = dirty

    def insert(self, key, dirty: bool = False):
        """Insert ``key`` as most recently used.

        Returns the evicted ``(key, dirty)`` pair when the set was full, else
        None. A key already present is refreshed and its dirty bit OR-ed.
        """
        if not self._sets:
            raise ValueError("cannot insert into a zero-capacity cache")
        i = self._set_of(key)
        s = self._sets[i]
        if key in s:
            s[key] = s[key] or dirty
            s.move_to_end(key)
            self._tick(key)
            return None
        victim = None
        if len(s) >= self._limits[i]:
            vkey, vdirty = s.popitem(last=False)
            self._stamp.pop(vkey, None)
            self._size -= 1
            victim = (vkey, vdirty)
        s[key] = dirty
        self._size += 1
        self._tick(key)
        return victim

    def remove(self, key) -> bool:
        """Drop ``key``; returns its dirty bit."""
        dirty = self._sets[self._set_of(key)].pop(key)
        self._stamp.pop(key, None)
        self._size -= 1
        return dirty

    def discard(self, key):
        if key in self:
            return self.remove(key)
        return None

    def last_use(self, key) -> int:
        return self._stamp.get(key, 0)

    def resize(
        self, capacity: int, keep_rank: Callable[[Hashable], object] | None = None
    ) -> list[tuple[Hashable, bool]]:
        """Re-shard to a new capacity, returning evicted ``(key, dirty)`` pairs.

        Entries with the highest ``keep_rank`` survive (default: most recently
        used). Survivors keep their relative recency order.
        """
        rank = keep_rank or self.last_use
        entries = list(self.items())
        old_stamp = self._stamp
        self._layout(capacity)
        evicted = []
        if not self._sets:
            evicted = sorted(entries, key=lambda e: rank(e[0]))
            self._stamp = {}
            return evicted
        buckets: dict[int, list] = {}
        for k, d in entries:
            buckets.setdefault(self._set_of(k), []).append((k, d))
        for i, members in buckets.items():
            members.sort(key=lambda e: rank(e[0]), reverse=True)
            keep, drop = members[: self._limits[i]], members[self._limits[i]:]
            evicted.extend(drop)
            keep.sort(key=lambda e: old_stamp.get(e[0], 0))
            for k, d in keep:
                self._sets[i][k] = d
                self._size += 1
        self._stamp = {k: old_stamp.get(k, 0) for k in self}
        evicted.sort(key=lambda e: rank(e[0]))
        return evicted
