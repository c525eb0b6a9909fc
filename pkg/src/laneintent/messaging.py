"""Over-the-air message records, byte codecs, channel, and the object map.

Two message types travel between vehicles: periodically broadcast safety
state messages (BSM) carrying each sender's kinematics, and point-to-point
driver intent messages (DIM) sent by the host to one recognized target.
Both have fixed-width little-endian wire layouts so traces can be written
and replayed bit-exactly.
"""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass, field
from typing import NamedTuple

SIGNAL_OFF, SIGNAL_LEFT, SIGNAL_RIGHT = 0, 1, 2
SIGNAL_NAMES = {SIGNAL_OFF: "off", SIGNAL_LEFT: "left", SIGNAL_RIGHT: "right"}
SIGNAL_CODES = {v: k for k, v in SIGNAL_NAMES.items()}

APP_LANE_CHANGE = 0
APP_STOP_SIGN_ROW = 1
APP_SLOW_TRAFFIC = 2
APP_TAILGATING = 3
APP_LATE_GREEN = 4
APP_TYPES = (APP_LANE_CHANGE, APP_STOP_SIGN_ROW, APP_SLOW_TRAFFIC,
             APP_TAILGATING, APP_LATE_GREEN)

_BSM_STRUCT = struct.Struct("<IQ6dB")
_DIM_STRUCT = struct.Struct("<IIBBQ")

BSM_WIRE_SIZE = _BSM_STRUCT.size  # 61
DIM_WIRE_SIZE = _DIM_STRUCT.size  # 18


class MalformedMessageError(ValueError):
    """Raised when bytes cannot be decoded into a valid message."""


class Bsm(NamedTuple):
    sender_id: int
    timestamp: int  # ms since run start
    x: float
    y: float
    heading: float
    speed: float
    yaw_rate: float
    accel: float
    turn_signal: int = SIGNAL_OFF


class Dim(NamedTuple):
    sender_id: int
    target_id: int
    direction: int  # SIGNAL_LEFT or SIGNAL_RIGHT
    timestamp: int
    app_type: int = APP_LANE_CHANGE

    def validate(self) -> "Dim":
        if self.target_id == self.sender_id:
            raise ValueError("DIM target must differ from sender")
        if self.direction not in (SIGNAL_LEFT, SIGNAL_RIGHT):
            raise ValueError("DIM direction must be left or right")
        if self.app_type not in APP_TYPES:
            raise ValueError(f"unknown app_type {self.app_type}")
        return self


def encode_bsm(b: Bsm) -> bytes:
    for v in (b.x, b.y, b.heading, b.speed, b.yaw_rate, b.accel):
        if not math.isfinite(v):
            raise ValueError("BSM float fields must be finite")
    if b.turn_signal not in SIGNAL_NAMES:
        raise ValueError(f"invalid turn_signal {b.turn_signal}")
    return _BSM_STRUCT.pack(b.sender_id, b.timestamp, b.x, b.y, b.heading,
                            b.speed, b.yaw_rate, b.accel, b.turn_signal)


def decode_bsm(data: bytes) -> Bsm:
    if len(data) != BSM_WIRE_SIZE:
        raise MalformedMessageError(
            f"BSM must be {BSM_WIRE_SIZE} bytes, got {len(data)}")
    sender, ts, x, y, heading, speed, yaw, accel, sig = _BSM_STRUCT.unpack(data)
    if sig not in SIGNAL_NAMES:
        raise MalformedMessageError(f"invalid turn_signal byte {sig:#x}")
    return Bsm(sender, ts, x, y, heading, speed, yaw, accel, sig)


def encode_dim(d: Dim) -> bytes:
    d.validate()
    return _DIM_STRUCT.pack(d.sender_id, d.target_id, d.app_type, d.direction,
                            d.timestamp)


def decode_dim(data: bytes) -> Dim:
    if len(data) != DIM_WIRE_SIZE:
        raise MalformedMessageError(
            f"DIM must be {DIM_WIRE_SIZE} bytes, got {len(data)}")
    sender, target, app, direction, ts = _DIM_STRUCT.unpack(data)
    if app not in APP_TYPES:
        raise MalformedMessageError(f"invalid app_type byte {app:#x}")
    if direction not in (SIGNAL_LEFT, SIGNAL_RIGHT):
        raise MalformedMessageError(f"invalid direction byte {direction:#x}")
    if target == sender:
        raise MalformedMessageError("DIM target equals sender")
    return Dim(sender, target, direction, ts, app)


class Channel:
    """Broadcast/unicast medium with independent per-delivery loss.

    Its RNG stream is separate from everything else in a run, so changing
    the loss probability never perturbs vehicle dynamics.
    """

    def __init__(self, loss_prob: float = 0.0, seed: int = 0):
        if not 0.0 <= loss_prob <= 1.0:
            raise ValueError("loss_prob must be in [0, 1]")
        self.loss_prob = loss_prob
        self._rng = random.Random(f"{seed}:channel")

    def deliver(self) -> bool:
        if self.loss_prob <= 0.0:
            return True
        if self.loss_prob >= 1.0:
            return False
        return self._rng.random() >= self.loss_prob


def broadcast_bsms(bsms: list[Bsm], channel: Channel,
                   receiver_ids: list[int]) -> list[tuple[int, Bsm]]:
    """Offer every BSM to every other vehicle; return (receiver, bsm) deliveries.

    Loss is drawn independently per (sender, receiver) pair in deterministic
    order.  The lossless fast path skips RNG draws entirely.
    """
    out = []
    if channel.loss_prob <= 0.0:
        for b in bsms:
            for rid in receiver_ids:
                if rid != b.sender_id:
                    out.append((rid, b))
        return out
    for b in bsms:
        for rid in receiver_ids:
            if rid != b.sender_id and channel.deliver():
                out.append((rid, b))
    return out


@dataclass
class LocalObjectMap:
    """Latest-state fusion of received BSMs, one entry per sender.

    Entries map sender id to (bsm, receipt time); out-of-order messages are
    dropped and counted rather than reordered.
    """

    staleness_timeout: float = 1.0
    entries: dict[int, tuple[Bsm, float]] = field(default_factory=dict)
    dropped_out_of_order: int = 0

    def update(self, bsm: Bsm, now: float) -> bool:
        cur = self.entries.get(bsm.sender_id)
        if cur is not None and bsm.timestamp < cur[0].timestamp:
            self.dropped_out_of_order += 1
            return False
        self.entries[bsm.sender_id] = (bsm, now)
        return True

    def expire_stale(self, now: float) -> None:
        dead = [vid for vid, (_, received_at) in self.entries.items()
                if now - received_at > self.staleness_timeout]
        for vid in dead:
            del self.entries[vid]

    def remotes(self) -> list[Bsm]:
        return [bsm for bsm, _ in self.entries.values()]
