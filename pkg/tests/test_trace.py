import gzip
import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from etica.trace import (
    BlockRef,
    Op,
    TraceParseError,
    TraceRecord,
    UnsortedStreamError,
    format_record,
    load_trace,
    merge_streams,
    parse_trace,
    sniff_format,
    to_blocks,
    write_trace,
)


def test_parse_msr_line():
    line = "128166372003061629,hm,1,Read,383496192,32768,41814\n"
    (r,) = parse_trace(io.StringIO(line), "msr")
    assert r == TraceRecord(128166372003061629, 0, Op.READ, 383496192, 32768)


def test_msr_op_is_case_insensitive():
    recs = parse_trace(io.StringIO("1,h,0,WRITE,0,512,0\n2,h,0,read,0,512,0\n"), "msr")
    assert [r.op for r in recs] == [Op.WRITE, Op.READ]


def test_parse_simple_line():
    (r,) = parse_trace(io.StringIO("0,W,4096,4096"), "simple", vm_id=3)
    assert r == TraceRecord(0, 3, Op.WRITE, 4096, 4096)


def test_unknown_op_is_a_parse_error():
    with pytest.raises(TraceParseError, match="unknown op"):
        parse_trace(io.StringIO("0,X,0,512\n"), "simple")


def test_parse_error_carries_line_number():
    text = "0,R,0,512\n1,R,0,512\n2,R,zero,512\n"
    with pytest.raises(TraceParseError) as err:
        parse_trace(io.StringIO(text), "simple")
    assert err.value.line_no == 3


@pytest.mark.parametrize("line", ["0,R,0", "0,R,0,0", "0,R,-1,512", "a,R,0,512"])
def test_malformed_lines(line):
    with pytest.raises(TraceParseError):
        parse_trace(io.StringIO(line), "simple")


def test_empty_file_is_empty_sequence():
    assert parse_trace(io.StringIO(""), "msr") == []


@pytest.mark.parametrize(
    "offset,length,expected",
    [
        (383496192, 32768, list(range(93627, 93635))),
        (0, 1, [0]),
        (4095, 2, [0, 1]),
        (4096, 4096, [1]),
    ],
)
def test_to_blocks(offset, length, expected):
    r = TraceRecord(0, 2, Op.READ, offset, length)
    out = to_blocks(r, 4096)
    assert [b.block for b, _ in out] == expected
    assert all(b.vm_id == 2 and op is Op.READ for b, op in out)


def test_to_blocks_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        to_blocks(TraceRecord(0, 0, Op.READ, 0, 1), 3000)


@given(
    offset=st.integers(0, 2**40),
    length=st.integers(1, 2**20),
    shift=st.integers(9, 16),
)
def test_block_coverage(offset, length, shift):
    bs = 1 << shift
    blocks = [b.block for b, _ in to_blocks(TraceRecord(0, 0, Op.WRITE, offset, length), bs)]
    assert blocks == list(range(blocks[0], blocks[-1] + 1))
    assert blocks[0] * bs <= offset < (blocks[0] + 1) * bs
    end = offset + length
    assert blocks[-1] * bs < end <= (blocks[-1] + 1) * bs


def _rec(ts, vm=0, off=0):
    return TraceRecord(ts, vm, Op.READ, off, 512)


def test_merge_interleaves_by_timestamp():
    merged = merge_streams([[_rec(1), _rec(3)], [_rec(2, vm=1)]])
    assert [r.timestamp for r in merged] == [1, 2, 3]


def test_merge_tie_goes_to_lower_vm():
    merged = merge_streams([[_rec(5, vm=1)], [_rec(5, vm=0)]])
    assert [r.vm_id for r in merged] == [0, 1]


def test_merge_with_empty_stream():
    s = [_rec(1), _rec(1, off=512), _rec(4)]
    assert merge_streams([[], s]) == s


def test_merge_rejects_unsorted_stream():
    with pytest.raises(UnsortedStreamError) as err:
        merge_streams([[_rec(1)], [_rec(2), _rec(1)]])
    assert (err.value.stream, err.value.index) == (1, 1)


records_st = st.lists(
    st.builds(
        TraceRecord,
        timestamp=st.integers(0, 2**62),
        vm_id=st.just(0),
        op=st.sampled_from(Op),
        offset=st.integers(0, 2**48),
        length=st.integers(1, 2**24),
    ),
    max_size=30,
)


@pytest.mark.parametrize("fmt", ["msr", "simple"])
@given(recs=records_st)
def test_round_trip(fmt, recs):
    buf = io.StringIO()
    write_trace(recs, buf, fmt)
    assert parse_trace(io.StringIO(buf.getvalue()), fmt) == recs


@given(streams=st.lists(st.lists(st.integers(0, 20), max_size=15), max_size=4))
def test_merge_length_order_and_determinism(streams):
    streams = [[_rec(ts, vm=i, off=j * 512) for j, ts in enumerate(sorted(s))] for i, s in enumerate(streams)]
    a = merge_streams(streams)
    assert len(a) == sum(map(len, streams))
    assert [r.timestamp for r in a] == sorted(r.timestamp for r in a)
    assert a == merge_streams(streams)


def test_gzip_and_sniffing(tmp_path):
    recs = [TraceRecord(i, 0, Op.READ, i * 4096, 4096) for i in range(5)]
    buf = io.StringIO()
    write_trace(recs, buf, "msr")
    plain = tmp_path / "a.csv"
    plain.write_text(buf.getvalue())
    gz = tmp_path / "a.csv.gz"
    with gzip.open(gz, "wt") as fh:
        fh.write(buf.getvalue())
    assert sniff_format(plain) == "msr"
    assert load_trace(plain) == recs
    assert load_trace(gz, vm_id=0) == recs
    assert format_record(recs[0], "simple") == "0,R,0,4096"


def test_missing_trace_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="trace not found"):
        load_trace(tmp_path / "nope.csv")


def test_blockref_orders_by_vm_then_block():
    assert sorted([BlockRef(1, 0), BlockRef(0, 5)]) == [BlockRef(0, 5), BlockRef(1, 0)]
