"""Lane-change intent messaging simulator.

A closed-loop microscopic traffic simulation on a ring track where a host
vehicle periodically signals lane changes, recognizes the trailing target
vehicle in the signaled lane from broadcast safety messages, and sends it a
point-to-point intent message, plus a replay harness that runs the same
recognition over recorded traces.
"""

from .geometry import (OffRoadError, SegmentSpec, TrackPosition, TrackSpec,
                       WorldPose, build_octagon_track, longitudinal_gap,
                       project_to_track, to_world)
from .messaging import (Bsm, Channel, Dim, LocalObjectMap,
                        MalformedMessageError, decode_bsm, decode_dim,
                        encode_bsm, encode_dim)
from .path_history import (PathCoverageError, PathHistoryBuffer,
                           PathHistoryPoint, closest_point, lane_shift_since,
                           lateral_offset_at)
from .recognition import (DmsConfig, LaneChangeIntent, RecognitionResult,
                          lane_offset_lateral, lane_offset_ph, recognize_tv)
from .sim import (LaneChangeManeuver, SimConfig, SimulationIntegrityError,
                  VehicleState, World, apply_brake_reaction, krauss_safe_speed)
from .metrics import Outcome, classify, ground_truth_tv

__all__ = [
    "Bsm", "Channel", "Dim", "DmsConfig", "LaneChangeIntent",
    "LaneChangeManeuver", "LocalObjectMap", "MalformedMessageError",
    "OffRoadError", "Outcome", "PathCoverageError", "PathHistoryBuffer",
    "PathHistoryPoint", "RecognitionResult", "SegmentSpec", "SimConfig",
    "SimulationIntegrityError", "TrackPosition", "TrackSpec", "VehicleState",
    "World", "WorldPose", "apply_brake_reaction", "build_octagon_track",
    "classify", "closest_point", "decode_bsm", "decode_dim", "encode_bsm",
    "encode_dim", "ground_truth_tv", "krauss_safe_speed",
    "lane_offset_lateral", "lane_offset_ph", "lane_shift_since",
    "lateral_offset_at", "longitudinal_gap", "project_to_track",
    "recognize_tv", "to_world",
]
