import json

import pytest

from etica.metrics import (
    SCHEMA,
    Counters,
    LatencyConfig,
    ReportConsistencyError,
    ServicePath,
    assemble_report,
    check_counters,
    report_to_csv,
    request_latency,
)

LAT = LatencyConfig()


def test_path_latencies():
    assert request_latency(ServicePath.DRAM_HIT, LAT) == 1
    assert request_latency(ServicePath.READ_MISS, LAT) == 5001
    assert request_latency(ServicePath.READ_MISS, LAT, dram_fill=False) == 5000
    assert request_latency(ServicePath.SSD_READ_HIT, LAT) == 101
    assert request_latency(ServicePath.SSD_WRITE_HIT, LAT) == 300
    assert request_latency(ServicePath.WRITE_MISS, LAT) == 5000


def test_mean_latency():
    c = Counters(requests=2, block_accesses=2, reads=2, dram_hits=1, read_misses=1,
                 latency_us=request_latency(ServicePath.DRAM_HIT, LAT)
                 + request_latency(ServicePath.READ_MISS, LAT))
    assert c.summary()["mean_latency_us"] == 2501


def test_latency_config_must_be_positive():
    with pytest.raises(ValueError):
        LatencyConfig(ssd_read_us=0)


def test_scaling_is_linear():
    k = 3.5
    for path in ServicePath:
        assert request_latency(path, LAT.scaled(k)) == pytest.approx(k * request_latency(path, LAT))


def test_empty_report():
    r = assemble_report({}, {}, {"engine": "etica"})
    assert r["schema"] == SCHEMA
    assert r["vms"] == {}
    assert all(v == 0 for v in r["totals"].values())


def test_identity_violation_is_loud():
    bad = Counters(ssd_writes_total=1)
    with pytest.raises(ReportConsistencyError, match="ssd_writes_total"):
        check_counters(bad)
    with pytest.raises(ReportConsistencyError):
        assemble_report({0: [bad]}, {0: [(0, 0)]})


def test_totals_are_interval_sums():
    a = Counters(requests=1, block_accesses=1, reads=1, dram_hits=1, latency_us=1.0)
    b = Counters(requests=2, block_accesses=2, writes=2, ssd_write_hits=2,
                 ssd_writes_total=2, latency_us=600.0)
    r = assemble_report({0: [a, b]}, {0: [(1, 1), (2, 2)]})
    t = r["vms"]["0"]["totals"]
    assert t["requests"] == 3 and t["ssd_writes_total"] == 2
    assert t["mean_latency_us"] == pytest.approx(601 / 3)
    assert r["totals"]["total_hit_ratio"] == 1.0
    json.dumps(r)
    lines = report_to_csv(r).splitlines()
    assert len(lines) == 3 and lines[0].startswith("vm,interval")
