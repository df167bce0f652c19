import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from etica.popularity import PopularityTable, access_weight, select_queues, update_popularity
from etica.reuse import INFINITE
from etica.trace import BlockRef


def b(n):
    return BlockRef(0, n)


def test_fresh_block_scores():
    t = PopularityTable()
    assert update_popularity(t, b(1), 0, 10) == 1.0
    assert update_popularity(t, b(2), INFINITE, 10) == 0.0
    assert t.num_acc[b(2)] == 1
    assert update_popularity(t, b(3), None, 10) == 0.0


def test_pods_zero_and_cache_size():
    t = PopularityTable()
    t.update(b(1), 0, 64)
    t.update(b(1), 64, 64)
    assert abs(t.score(b(1)) - (1 + math.exp(-1))) < 1e-12


def test_zero_cache_size_is_floored():
    assert access_weight(2, 1) == math.exp(-2)
    assert PopularityTable().update(b(1), 2, 0) == math.exp(-2)


def test_decay_and_forget():
    t = PopularityTable(decay=0.5)
    t.update(b(1), 0, 4)
    t.apply_decay()
    assert t.score(b(1)) == 0.5
    t.forget(b(1))
    assert t.score(b(1)) == 0.0 and len(t) == 0
    assert t.metadata_bytes == 0


@given(p1=st.integers(0, 10**4), p2=st.integers(0, 10**4), s=st.integers(1, 10**4))
def test_weight_monotone_in_pod(p1, p2, s):
    lo, hi = sorted((p1, p2))
    assert access_weight(lo, s) >= access_weight(hi, s)


@given(p=st.integers(0, 10**4), s1=st.integers(1, 10**4), s2=st.integers(1, 10**4))
def test_weight_monotone_in_size(p, s1, s2):
    lo, hi = sorted((s1, s2))
    assert access_weight(p, lo) <= access_weight(p, hi)
    assert 0.0 <= access_weight(p, lo) <= 1.0


def test_promotion_takes_top_five_percent():
    t = PopularityTable({b(i): float(i) for i in range(20)})
    q = select_queues(t, [], [b(i) for i in range(20)])
    assert q.promotion_queue == [b(19)]
    assert q.eviction_queue == []


def test_eviction_takes_bottom_with_ceiling():
    t = PopularityTable({b(i): float(i) for i in range(1, 11)})
    q = select_queues(t, [b(i) for i in range(1, 11)], [])
    assert q.eviction_queue == [b(1)]


def test_exact_multiple_does_not_round_up():
    t = PopularityTable()
    q = select_queues(t, [b(i) for i in range(60)], [])
    assert len(q.eviction_queue) == 3


def test_ties_go_to_lower_block():
    t = PopularityTable({b(5): 1.0, b(2): 1.0, b(9): 1.0})
    q = select_queues(t, [b(9), b(5), b(2)], [b(9), b(5), b(2)], fraction=0.5)
    assert q.eviction_queue == [b(2), b(5)]
    assert q.promotion_queue == [b(2), b(5)]


def test_fraction_validated():
    with pytest.raises(ValueError):
        select_queues(PopularityTable(), [], [], fraction=0)


@given(scores=st.dictionaries(st.integers(0, 200), st.floats(0, 50), max_size=60),
       frac=st.floats(0.01, 1.0))
def test_queue_sizes_and_ordering(scores, frac):
    t = PopularityTable({b(k): v for k, v in scores.items()})
    blocks = [b(k) for k in scores]
    q = select_queues(t, blocks, blocks, frac)
    n = math.ceil(round(frac * len(blocks), 9))
    assert len(q.eviction_queue) == len(q.promotion_queue) == n
    rest = set(blocks) - set(q.eviction_queue)
    assert all(t.score(x) <= t.score(y) for x in q.eviction_queue for y in rest)
    rest = set(blocks) - set(q.promotion_queue)
    assert all(t.score(x) >= t.score(y) for x in q.promotion_queue for y in rest)
