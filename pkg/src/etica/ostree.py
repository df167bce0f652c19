"""Growable Fenwick tree used as an order-statistics index over positions."""
from __future__ import annotations


class FenwickTree:
    """Prefix sums over integer positions ``0..n-1`` that grows on demand.

    Reuse-distance counting keeps a 1 at the position of each block's
    latest qualifying access; the number of distinct blocks touched between
    two positions is then a range sum.
    """

    def __init__(self, size: int = 1024):
        size = max(1, size)
        self._vals = [0] * size
        self._tree = [0] * (size + 1)

    def __len__(self):
        return len(self._vals)

    def _grow(self, needed: int):
        size = len(self._vals)
        while size <= needed:
            size *= 2
        self._vals.extend([0] * (size - len(self._vals)))
        tree = [0] * (size + 1)
        for i, v in enumerate(self._vals, start=1):
            if v:
                tree[i] += v
            j = i + (i & -i)
            if j <= size:
                tree[j] += tree[i]
        self._tree = tree

    def add(self, pos: int, delta: int):
        if pos >= len(self._vals):
            self._grow(pos)
        self._vals[pos] += delta
        i = pos + 1
        tree = self._tree
        n = len(tree)
        while i < n:
            tree[i] += delta
            i += i & -i

    def prefix(self, pos: int) -> int:
        """Sum of positions ``0..pos-1``."""
        i = min(pos, len(self._vals))
        tree = self._tree
        total = 0
        while i > 0:
            total += tree[i]
            i -= i & -i
        return total

    def range_sum(self, lo: int, hi: int) -> int:
        """Sum over the half-open position range ``[lo, hi)``."""
        if hi <= lo:
            return 0
        return self.prefix(hi) - self.prefix(lo)
