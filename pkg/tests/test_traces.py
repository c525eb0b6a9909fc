import pytest

from laneintent.messaging import Bsm, SIGNAL_LEFT, SIGNAL_OFF
from laneintent.traces import (TraceFormatError, read_trace, read_trace_binary,
                               read_trace_csv, write_trace_binary,
                               write_trace_csv)


@pytest.fixture
def bsms():
    return [Bsm(i % 3, i * 100, 1.5 * i, -2.25 * i, 0.123 * i, 22.0 + i,
                0.01 * i, -0.5, SIGNAL_LEFT if i % 2 else SIGNAL_OFF)
            for i in range(10)]


def test_binary_round_trip(tmp_path, bsms):
    path = tmp_path / "t.bsm"
    write_trace_binary(path, bsms)
    assert read_trace_binary(path) == bsms


def test_csv_round_trip(tmp_path, bsms):
    path = tmp_path / "t.csv"
    write_trace_csv(path, bsms)
    assert read_trace_csv(path) == bsms


def test_formats_bit_exact_cross_conversion(tmp_path, bsms):
    bin1 = tmp_path / "a.bsm"
    write_trace_binary(bin1, bsms)
    csv1 = tmp_path / "a.csv"
    write_trace_csv(csv1, read_trace_binary(bin1))
    bin2 = tmp_path / "b.bsm"
    write_trace_binary(bin2, read_trace_csv(csv1))
    assert bin1.read_bytes() == bin2.read_bytes()


def test_read_trace_dispatches_on_suffix(tmp_path, bsms):
    b = tmp_path / "t.bsm"
    c = tmp_path / "t.csv"
    write_trace_binary(b, bsms)
    write_trace_csv(c, bsms)
    assert read_trace(b) == read_trace(c) == bsms


def test_truncated_final_record_names_index(tmp_path, bsms):
    path = tmp_path / "t.bsm"
    write_trace_binary(path, bsms)
    data = path.read_bytes()
    path.write_bytes(data[:-10])
    with pytest.raises(TraceFormatError, match="record 9"):
        read_trace_binary(path)


def test_csv_bad_signal_names_index(tmp_path, bsms):
    path = tmp_path / "t.csv"
    write_trace_csv(path, bsms)
    lines = path.read_text().splitlines()
    lines[3] = lines[3].replace("left", "sideways").replace("off", "sideways")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(TraceFormatError, match="record 2"):
        read_trace_csv(path)


def test_csv_bad_header_rejected(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("nope,columns\n")
    with pytest.raises(TraceFormatError, match="header"):
        read_trace_csv(path)
