"""Target-vehicle recognition for the lane-change application.

Pipeline per signal activation: detect the intent from the local object
map, filter trailing vehicles within the distance threshold, estimate each
candidate's lane offset relative to the host, and pick the nearest
candidate sitting exactly one lane over on the signaled side.

Two offset estimators are provided.  The path-history method measures a
candidate against the trail point the host once occupied next to it, then
corrects for any host lane changes since; it stays accurate on curved
roads.  The lateral-only baseline projects the candidate onto the host's
current heading ray, which misreads candidates whenever the road bends
between them and the host.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import TrackSpec, longitudinal_gap, project_to_track, WorldPose
from .messaging import Bsm, Dim, LocalObjectMap, SIGNAL_LEFT, SIGNAL_OFF, SIGNAL_RIGHT
from .path_history import (PathCoverageError, PathHistoryBuffer, check_coverage,
                           closest_point, lane_shift_since, lateral_offset_at)

RECOGNITION_METHODS = ("path_history", "lateral_only")

# |raw/width - rounded| beyond this marks a candidate ambiguous
AMBIGUITY_FRACTION = 0.35


@dataclass(frozen=True)
class DmsConfig:
    tv_dist_thresh: float
    recognition_method: str
    lane_width: float

    def __post_init__(self) -> None:
        if self.tv_dist_thresh <= 0.0:
            raise ValueError("tv_dist_thresh must be positive")
        if self.recognition_method not in RECOGNITION_METHODS:
            raise ValueError(f"method must be one of {RECOGNITION_METHODS}")
        if self.lane_width <= 0.0:
            raise ValueError("lane_width must be positive")


@dataclass(frozen=True)
class LaneChangeIntent:
    hv_id: int
    direction: int  # SIGNAL_LEFT or SIGNAL_RIGHT
    detected_at: int  # ms


@dataclass
class CandidateOffset:
    vehicle_id: int
    gap: float
    raw_offset: float | None = None  # lateral offset / lane width
    lane_offset: int | None = None   # None: ambiguous or not covered


@dataclass
class RecognitionResult:
    tv_id: int | None
    candidates: list[CandidateOffset] = field(default_factory=list)

    @property
    def candidates_considered(self) -> int:
        return len(self.candidates)


class IntentLatch:
    """Edge-triggers one intent per signal activation."""

    def __init__(self) -> None:
        self._last_signal = SIGNAL_OFF

    def detect_application(self, hv_signal: int, maneuver_executing: bool,
                           hv_id: int, now_ms: int) -> LaneChangeIntent | None:
        prev, self._last_signal = self._last_signal, hv_signal
        if hv_signal not in (SIGNAL_LEFT, SIGNAL_RIGHT):
            return None
        if maneuver_executing or prev == hv_signal:
            return None
        return LaneChangeIntent(hv_id=hv_id, direction=hv_signal, detected_at=now_ms)


def find_trailing(object_map: LocalObjectMap, hv_s: float, track: TrackSpec,
                  thresh: float) -> list[tuple[Bsm, float]]:
    """Trailing vehicles within ``thresh`` behind the host, nearest first.

    Longitudinal distance is arc length along the track; each remote's BSM
    position is projected onto the track to obtain it.
    """
    out = []
    for bsm in object_map.remotes():
        pos = project_to_track(track, WorldPose(bsm.x, bsm.y, bsm.heading))
        gap = longitudinal_gap(track, hv_s, pos.s)
        if 0.0 < gap <= thresh:
            out.append((bsm, gap))
    out.sort(key=lambda item: (item[1], item[0].sender_id))
    return out


def find_trailing_by_path(object_map: LocalObjectMap, ph: PathHistoryBuffer,
                          thresh: float) -> list[tuple[Bsm, float]]:
    """Map-free variant: longitudinal distance measured as chord length along
    the host's stored trail from the candidate's closest trail point."""
    pts = ph.points
    if not pts:
        return []
    cum = [0.0]
    for i in range(1, len(pts)):
        cum.append(cum[-1] + math.hypot(pts[i].x - pts[i - 1].x,
                                        pts[i].y - pts[i - 1].y))
    out = []
    for bsm in object_map.remotes():
        idx = closest_point(ph, (bsm.x, bsm.y))
        gap = cum[-1] - cum[idx]
        if 0.0 < gap <= thresh:
            out.append((bsm, gap))
    out.sort(key=lambda item: (item[1], item[0].sender_id))
    return out


def _round_half_away(x: float) -> int:
    return math.floor(x + 0.5) if x >= 0.0 else math.ceil(x - 0.5)


def _quantize(raw_lateral: float, lane_width: float,
              shift_correction: int = 0) -> tuple[float, int | None]:
    raw = raw_lateral / lane_width
    rounded = _round_half_away(raw)
    if abs(raw - rounded) > AMBIGUITY_FRACTION:
        return raw, None
    return raw, rounded - shift_correction


def lane_offset_ph(ph: PathHistoryBuffer, candidate_pos: tuple[float, float],
                   lane_width: float) -> tuple[float, int | None]:
    """Candidate lane offset via the host's trail (positive = left of host).

    Returns (raw offset in lane widths, quantized offset or None when the
    quantization is ambiguous).  Raises :class:`PathCoverageError` when the
    candidate lies beyond the stored trail.
    """
    idx = closest_point(ph, candidate_pos)
    check_coverage(ph, idx, candidate_pos)
    lateral = lateral_offset_at(ph, idx, candidate_pos)
    shift = lane_shift_since(ph, idx, lane_width)
    return _quantize(lateral, lane_width, shift)


def lane_offset_lateral(hv_pose: WorldPose, candidate_pos: tuple[float, float],
                        lane_width: float) -> tuple[float, int | None]:
    """Naive baseline: perpendicular offset from the host's current heading ray."""
    dx = candidate_pos[0] - hv_pose.x
    dy = candidate_pos[1] - hv_pose.y
    lateral = -dx * math.sin(hv_pose.heading) + dy * math.cos(hv_pose.heading)
    return _quantize(lateral, lane_width)


def candidate_offsets(trailing: list[tuple[Bsm, float]], method: str,
                      hv_pose: WorldPose, ph: PathHistoryBuffer | None,
                      lane_width: float) -> list[CandidateOffset]:
    """Attach a lane-offset estimate to every trailing candidate."""
    out = []
    for bsm, gap in trailing:
        cand = CandidateOffset(vehicle_id=bsm.sender_id, gap=gap)
        pos = (bsm.x, bsm.y)
        if method == "path_history":
            try:
                cand.raw_offset, cand.lane_offset = lane_offset_ph(
                    ph, pos, lane_width)
            except PathCoverageError:
                pass
        else:
            cand.raw_offset, cand.lane_offset = lane_offset_lateral(
                hv_pose, pos, lane_width)
        out.append(cand)
    return out


def recognize_tv(candidates: list[CandidateOffset],
                 intent: LaneChangeIntent) -> RecognitionResult:
    """Pick the nearest candidate exactly one lane over on the intent side.

    Candidates must arrive nearest-first.  A left intent targets offset +1,
    a right intent -1; candidates with ambiguous or uncovered offsets never
    qualify.
    """
    wanted = 1 if intent.direction == SIGNAL_LEFT else -1
    for cand in candidates:
        if cand.lane_offset == wanted:
            return RecognitionResult(tv_id=cand.vehicle_id, candidates=candidates)
    return RecognitionResult(tv_id=None, candidates=candidates)


def issue_dim(intent: LaneChangeIntent, tv_id: int, now_ms: int) -> Dim:
    return Dim(sender_id=intent.hv_id, target_id=tv_id,
               direction=intent.direction, timestamp=now_ms).validate()
