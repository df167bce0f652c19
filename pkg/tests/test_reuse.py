import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import RAW_MIX, RAR_MIX, R, W, accesses
from oracles import lru_hits, naive_distances
from etica.ostree import FenwickTree
from etica.policy_sim import WritePolicy, simulate_single_level
from etica.reuse import (
    INFINITE,
    MRC,
    DistanceMetric,
    ReuseTracker,
    build_mrc,
    compute_distances,
    max_pod,
)
from etica.trace import BlockRef

METRICS = [m.value for m in DistanceMetric]

acc_st = st.lists(
    st.tuples(st.integers(0, 12).map(lambda b: BlockRef(0, b)), st.sampled_from([R, W])),
    max_size=80,
)


def test_fenwick_basic():
    t = FenwickTree(2)
    for i in range(10):
        t.add(i, i)
    assert t.prefix(10) == 45
    assert t.range_sum(3, 6) == 3 + 4 + 5
    t.add(4, -4)
    assert t.range_sum(0, 10) == 41
    assert t.range_sum(5, 5) == 0


@given(st.lists(st.tuples(st.integers(0, 300), st.integers(-5, 5)), max_size=60))
def test_fenwick_matches_list(ops):
    t, ref = FenwickTree(1), [0] * 301
    for pos, d in ops:
        t.add(pos, d)
        ref[pos] += d
    for lo in range(0, 301, 37):
        for hi in range(lo, 302, 41):
            assert t.range_sum(lo, hi) == sum(ref[lo:hi])


def test_raw_mix_distances():
    acc = accesses(RAW_MIX)
    urd = compute_distances(acc, "urd")
    assert urd.max_finite == 4
    assert compute_distances(acc, "pod-wbwo").max_finite == 1
    # the trailing R4 reuses the block written two steps earlier
    assert compute_distances(acc, "pod-wbwo").distances[-1] == 1
    assert compute_distances(acc, "trd").max_finite == 4


def test_rar_mix_distances():
    acc = accesses(RAR_MIX)
    assert compute_distances(acc, "urd").max_finite == 4
    assert compute_distances(acc, "pod-ro").max_finite == 0
    assert max_pod(compute_distances(acc, "pod-ro")) == 0


def test_tracker_conventions():
    t = ReuseTracker("urd")
    b = BlockRef(0, 1)
    assert t.access(b, W) is None
    assert t.access(b, R) == 0
    assert ReuseTracker("trd").access(b, R) == INFINITE


def test_empty_trace_has_no_maximum():
    assert compute_distances([], "urd").max_finite is None


def test_single_block_repeated_reads():
    acc = [(BlockRef(0, 7), R)] * 5
    for m in ("trd", "urd", "pod-ro", "pod-wb"):
        assert compute_distances(acc, m).distances == [INFINITE, 0, 0, 0, 0]
    assert compute_distances(acc, "pod-wbwo").distances == [INFINITE] * 5


def test_metric_parse_aliases():
    assert DistanceMetric.parse("POD_WBWO") is DistanceMetric.POD_WBWO
    assert DistanceMetric.parse("pod-wb") is DistanceMetric.POD_WB
    with pytest.raises(ValueError):
        DistanceMetric.parse("nope")


@settings(max_examples=150)
@given(acc=acc_st, metric=st.sampled_from(METRICS))
def test_matches_naive_oracle(acc, metric):
    assert compute_distances(acc, metric).distances == naive_distances(acc, metric)


@settings(max_examples=150)
@given(acc=acc_st)
def test_dominance(acc):
    mx = {m: compute_distances(acc, m).max_finite for m in METRICS}
    if mx["pod-ro"] is not None:
        assert mx["pod-ro"] <= mx["urd"]
    if mx["pod-wbwo"] is not None:
        assert mx["pod-wbwo"] <= mx["urd"]
    if mx["urd"] is not None:
        assert mx["urd"] <= mx["trd"]
    assert mx["pod-wb"] == mx["urd"]


@settings(max_examples=100)
@given(acc=acc_st, cap=st.integers(1, 14))
def test_lru_inclusion(acc, cap):
    trd = compute_distances(acc, "trd").distances
    predicted = [d != INFINITE and d < cap for d in trd]
    assert predicted == lru_hits(acc, cap)
    stats = simulate_single_level(acc, WritePolicy.WB, cap, associativity=0)
    assert stats.hits == sum(predicted)


def test_mrc_example():
    mrc = build_mrc([0, 0, 1, INFINITE], 6)
    assert mrc(0) == 0
    assert mrc(1) == pytest.approx(2 / 6)
    assert mrc(2) == pytest.approx(3 / 6)
    assert mrc(10**6) == pytest.approx(3 / 6)
    assert mrc.max_hit == pytest.approx(0.5)


def test_mrc_all_infinite_is_zero():
    mrc = build_mrc([INFINITE, INFINITE], 2)
    assert mrc(1) == 0 and mrc(100) == 0


def test_mrc_errors():
    with pytest.raises(ValueError):
        build_mrc([], 0)
    with pytest.raises(ValueError):
        build_mrc([0, 1, 2], 2)


@given(st.lists(st.one_of(st.integers(0, 40), st.just(INFINITE)), max_size=50), st.integers(0, 20))
def test_mrc_monotone_and_bounded(dists, extra):
    total = len(dists) + extra
    if total == 0:
        return
    mrc = build_mrc(dists, total)
    prev = 0.0
    for c in range(0, 45):
        h = mrc(c)
        assert prev <= h <= 1.0
        prev = h
    finite = sum(1 for d in dists if d != INFINITE)
    assert math.isclose(mrc(10**9), finite / total)


def test_mrc_round_trip():
    mrc = build_mrc([0, 3, 3, 7], 5)
    assert MRC.from_dict(mrc.to_dict()) == mrc


def test_profile_serialization():
    prof = compute_distances(accesses(RAW_MIX), "urd")
    d = prof.to_dict(per_access=True)
    assert d["max"] == 4
    assert sum(d["histogram"].values()) + d["cold"] == len(prof)
    assert len(d["distances"]) == len(prof)
