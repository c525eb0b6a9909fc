"""Safety-message trace files: binary and CSV twins.

Binary traces are a sequence of records, each a little-endian u32 length
prefix followed by one encoded message.  The CSV twin carries one row per
message with floats written in shortest round-trip form, so converting
either format to the other and back is bit-exact.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

from .messaging import (BSM_WIRE_SIZE, Bsm, MalformedMessageError,
                        SIGNAL_CODES, SIGNAL_NAMES, decode_bsm, encode_bsm)

CSV_COLUMNS = ("sender_id", "timestamp_ms", "x", "y", "heading", "speed",
               "yaw_rate", "accel", "turn_signal")

_LEN_PREFIX = struct.Struct("<I")


class TraceFormatError(ValueError):
    """A trace file is malformed; the message names the failing record."""


def write_trace_binary(path: str | Path, bsms: list[Bsm]) -> None:
    with open(path, "wb") as fh:
        for b in bsms:
            data = encode_bsm(b)
            fh.write(_LEN_PREFIX.pack(len(data)))
            fh.write(data)


def read_trace_binary(path: str | Path) -> list[Bsm]:
    out = []
    raw = Path(path).read_bytes()
    offset = 0
    index = 0
    while offset < len(raw):
        if offset + _LEN_PREFIX.size > len(raw):
            raise TraceFormatError(f"record {index}: truncated length prefix")
        (length,) = _LEN_PREFIX.unpack_from(raw, offset)
        offset += _LEN_PREFIX.size
        if length != BSM_WIRE_SIZE:
            raise TraceFormatError(
                f"record {index}: unexpected record length {length}")
        if offset + length > len(raw):
            raise TraceFormatError(f"record {index}: truncated record body")
        try:
            out.append(decode_bsm(raw[offset:offset + length]))
        except MalformedMessageError as exc:
            raise TraceFormatError(f"record {index}: {exc}") from exc
        offset += length
        index += 1
    return out


def write_trace_csv(path: str | Path, bsms: list[Bsm]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for b in bsms:
            writer.writerow([b.sender_id, b.timestamp, repr(b.x), repr(b.y),
                             repr(b.heading), repr(b.speed), repr(b.yaw_rate),
                             repr(b.accel), SIGNAL_NAMES[b.turn_signal]])


def read_trace_csv(path: str | Path) -> list[Bsm]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise TraceFormatError(f"bad header: expected {CSV_COLUMNS}")
        for index, row in enumerate(reader):
            if len(row) != len(CSV_COLUMNS):
                raise TraceFormatError(
                    f"record {index}: expected {len(CSV_COLUMNS)} fields, "
                    f"got {len(row)}")
            try:
                signal = SIGNAL_CODES[row[8]]
            except KeyError:
                raise TraceFormatError(
                    f"record {index}: unknown turn_signal {row[8]!r}") from None
            try:
                out.append(Bsm(int(row[0]), int(row[1]), float(row[2]),
                               float(row[3]), float(row[4]), float(row[5]),
                               float(row[6]), float(row[7]), signal))
            except ValueError as exc:
                raise TraceFormatError(f"record {index}: {exc}") from exc
    return out


def read_trace(path: str | Path) -> list[Bsm]:
    """Read either trace format, chosen by file suffix (.csv or binary)."""
    if str(path).endswith(".csv"):
        return read_trace_csv(path)
    return read_trace_binary(path)
