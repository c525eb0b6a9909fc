"""Trace replay: run recognition over recorded safety messages.

A replayed scenario feeds a stored message stream through the object map
and the host's path history, triggers the lane-change application on a
fixed schedule (a manually operated turn signal), and records the
recognition output per trigger.  When static lane annotations accompany
the trace, each trigger is also scored against the annotated truth.

Longitudinal distances have no track to measure along here, so both the
candidate filter and the truth oracle use chord length along the host's
stored trail.

:func:`generate_benchmark_trace` produces the bundled validation scenario:
two vehicles on a curved two-lane ring, the host ahead in the right lane,
the trailing vehicle 250 m behind in the left lane at a steady ~30 m/s.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import WorldPose, build_octagon_track, to_world
from .messaging import Bsm, LocalObjectMap, SIGNAL_LEFT
from .metrics import Outcome, RecognitionEvent, classify
from .path_history import PathHistoryBuffer, PathHistoryPoint
from .recognition import (LaneChangeIntent, candidate_offsets,
                          find_trailing_by_path, recognize_tv)
from .runner import DiagnosticsRow, _offsets_field
from .sim import SimConfig, World
from .traces import TraceFormatError, read_trace, write_trace_binary, write_trace_csv


@dataclass
class ReplayScenario:
    trace_path: str | Path
    hv_id: int = 0
    intent_period: float = 10.0
    direction: int = SIGNAL_LEFT
    method: str = "path_history"
    tv_dist_thresh: float = 300.0
    lane_width: float = 3.5
    max_path_length: float = 400.0
    min_sample_spacing: float = 1.0
    staleness_timeout: float = 1.0
    lanes: dict[int, int] | None = None  # static truth lanes, optional


@dataclass
class ReplayReport:
    events: list[RecognitionEvent] = field(default_factory=list)
    diagnostics: list[DiagnosticsRow] = field(default_factory=list)
    scored: bool = False

    def counts(self) -> dict[str, int]:
        out = {o.value: 0 for o in Outcome}
        for ev in self.events:
            if ev.outcome is not None:
                out[ev.outcome.value] += 1
        return out


def read_lane_annotations(path: str | Path) -> dict[int, int]:
    lanes = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != ("vehicle_id", "lane"):
            raise TraceFormatError("annotations header must be vehicle_id,lane")
        for row in reader:
            lanes[int(row[0])] = int(row[1])
    return lanes


def _truth_by_annotations(scenario: ReplayScenario, ph: PathHistoryBuffer,
                          object_map: LocalObjectMap) -> int | None:
    lanes = scenario.lanes
    hv_lane = lanes[scenario.hv_id]
    delta = -1 if scenario.direction == SIGNAL_LEFT else 1
    target_lane = hv_lane + delta
    best_id, best_gap = None, float("inf")
    for bsm, gap in find_trailing_by_path(object_map, ph,
                                          scenario.tv_dist_thresh):
        if lanes.get(bsm.sender_id) == target_lane and gap < best_gap:
            best_id, best_gap = bsm.sender_id, gap
    return best_id


def run_replay(scenario: ReplayScenario) -> ReplayReport:
    """Feed the trace through map + path history, triggering recognition on
    the intent schedule.  Raises :class:`TraceFormatError` on a bad trace."""
    records = read_trace(scenario.trace_path)
    if not any(b.sender_id == scenario.hv_id for b in records):
        raise TraceFormatError(f"host vehicle {scenario.hv_id} not in trace")

    object_map = LocalObjectMap(staleness_timeout=scenario.staleness_timeout)
    ph = PathHistoryBuffer(scenario.max_path_length, scenario.min_sample_spacing)
    report = ReplayReport(scored=scenario.lanes is not None)
    period_ms = round(scenario.intent_period * 1000)
    next_intent_ms = period_ms
    hv_pose: WorldPose | None = None

    def trigger(now_ms: int) -> None:
        if hv_pose is None or not ph.points:
            return
        intent = LaneChangeIntent(hv_id=scenario.hv_id,
                                  direction=scenario.direction,
                                  detected_at=now_ms)
        trailing = find_trailing_by_path(object_map, ph,
                                         scenario.tv_dist_thresh)
        cands = candidate_offsets(trailing, scenario.method, hv_pose, ph,
                                  scenario.lane_width)
        rec = recognize_tv(cands, intent)
        truth = (_truth_by_annotations(scenario, ph, object_map)
                 if report.scored else None)
        t = now_ms / 1000.0
        report.events.append(RecognitionEvent(
            t=t, method=scenario.method, thresh=scenario.tv_dist_thresh,
            predicted=rec.tv_id, truth=truth,
            outcome=classify(rec.tv_id, truth) if report.scored else None))
        report.diagnostics.append(DiagnosticsRow(
            t=t, method=scenario.method, thresh=scenario.tv_dist_thresh,
            n_candidates=rec.candidates_considered, chosen=rec.tv_id,
            offsets=_offsets_field(rec)))

    idx = 0
    n = len(records)
    while idx < n:
        ts = records[idx].timestamp
        while idx < n and records[idx].timestamp == ts:
            b = records[idx]
            if b.sender_id == scenario.hv_id:
                ph.append_sample(PathHistoryPoint(b.x, b.y, b.heading, b.speed,
                                                  b.yaw_rate, b.timestamp))
                hv_pose = WorldPose(b.x, b.y, b.heading)
            else:
                object_map.update(b, ts / 1000.0)
            idx += 1
        object_map.expire_stale(ts / 1000.0)
        while next_intent_ms <= ts:
            trigger(next_intent_ms)
            next_intent_ms += period_ms
    return report


def generate_benchmark_trace(out_dir: str | Path, duration: float = 240.0,
                             trailing_gap: float = 250.0, speed: float = 30.0,
                             arc_radius: float = 40.0,
                             straight_len: float = 80.0) -> dict[str, Path]:
    """Write the synthetic curved two-lane validation trace.

    Emits the binary trace, its CSV twin, and the static lane annotations;
    returns their paths.  The host (id 0) leads in lane 1, the trailing
    vehicle (id 1) follows ``trailing_gap`` meters behind in lane 0, and
    neither changes lanes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    track = build_octagon_track(straight_len, arc_radius, lane_count=2,
                                lane_width=3.5)
    config = SimConfig(n_vehicles=2, duration=duration, dt=0.1,
                       speed_classes=((speed, 3.5),), intent_period=0.0,
                       mode="no_dms", rng_seed=0,
                       speed_factor_range=(1.0, 1.0))
    world = World(track, config)
    world.vehicles[0].s = trailing_gap % track.total_length
    world.vehicles[0].lane = 1
    world.vehicles[1].s = 0.0
    world.vehicles[1].lane = 0
    world.lane_chains[0] = [1]
    world.lane_chains[1] = [0]
    for veh in world.vehicles:
        pose = to_world(track, veh.pos)
        veh.x, veh.y, veh.heading = pose.x, pose.y, pose.heading
        veh.seg_idx = world._segment_index(veh.s)

    bsms: list[Bsm] = []
    for tick in range(config.n_ticks):
        now_ms = round(tick * config.dt * 1000)
        for veh in world.vehicles:
            pose = world.world_pose(veh)
            bsms.append(Bsm(veh.id, now_ms, pose.x, pose.y, pose.heading,
                            veh.speed, veh.yaw_rate, veh.accel,
                            veh.turn_signal))
        world.step()

    paths = {
        "trace": out_dir / "benchmark_trace.bsm",
        "trace_csv": out_dir / "benchmark_trace.csv",
        "annotations": out_dir / "benchmark_lanes.csv",
    }
    write_trace_binary(paths["trace"], bsms)
    write_trace_csv(paths["trace_csv"], bsms)
    with open(paths["annotations"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("vehicle_id", "lane"))
        writer.writerow((0, 1))
        writer.writerow((1, 0))
    return paths
