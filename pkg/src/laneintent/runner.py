"""Closed-loop scenario execution.

Per tick, in order: broadcast safety messages into the host's object map,
append the host pose to its path history, schedule the periodic lane-change
intent, run recognition and send the intent message (recognition modes), start the
host maneuver, sample open headway windows, then advance the dynamics.
Recognition events are graded against the ground-truth oracle at the
instant they happen; headway windows open when a maneuver completes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import metrics, recognition
from .geometry import TrackSpec
from .messaging import (Bsm, Channel, LocalObjectMap, SIGNAL_NAMES,
                        broadcast_bsms)
from .metrics import (ExperimentResult, HeadwayLog, RecognitionEvent,
                      aggregate, classify, ground_truth_tv)
from .path_history import PathHistoryBuffer, PathHistoryPoint
from .recognition import (IntentLatch, RecognitionResult, candidate_offsets,
                          find_trailing, issue_dim, recognize_tv)
from .sim import DONE, EXECUTING, SimConfig, World


@dataclass
class DiagnosticsRow:
    """Per-intent recognition detail for the diagnostics CSV."""

    t: float
    method: str
    thresh: float
    n_candidates: int
    chosen: int | None
    offsets: str  # "id:raw:rounded;..." per candidate


@dataclass
class RunArtifacts:
    config: SimConfig
    result: ExperimentResult
    events: list[RecognitionEvent] = field(default_factory=list)
    headways: list[metrics.HeadwayRecord] = field(default_factory=list)
    diagnostics: list[DiagnosticsRow] = field(default_factory=list)


def _method_for_mode(mode: str) -> str | None:
    if mode == "dms_ph":
        return "path_history"
    if mode == "dms_lateral":
        return "lateral_only"
    return None


def _offsets_field(result: RecognitionResult) -> str:
    parts = []
    for c in result.candidates:
        raw = "" if c.raw_offset is None else f"{c.raw_offset:.3f}"
        rounded = "" if c.lane_offset is None else str(c.lane_offset)
        parts.append(f"{c.vehicle_id}:{raw}:{rounded}")
    return ";".join(parts)


def run_scenario(track: TrackSpec, config: SimConfig,
                 bsm_sink=None, truth_sink=None) -> RunArtifacts:
    """Run one scenario to completion and aggregate its metrics.

    ``bsm_sink``: optional callable receiving every broadcast Bsm (used to
    write trace files).  ``truth_sink``: optional callable receiving per-tick
    ground-truth rows (t, id, s, lane, lateral_offset, speed, yaw_rate,
    turn_signal).
    """
    world = World(track, config)
    channel = Channel(config.channel_loss_prob, seed=config.rng_seed)
    object_map = LocalObjectMap(staleness_timeout=config.staleness_timeout)
    ph = PathHistoryBuffer(config.max_path_length, config.min_sample_spacing)
    latch = IntentLatch()
    headway_log = HeadwayLog(track, config.headway_window,
                             max_initial_gap=config.tv_dist_thresh)

    method = _method_for_mode(config.mode)
    events: list[RecognitionEvent] = []
    diagnostics: list[DiagnosticsRow] = []

    hv = world.hv
    bsm_every = config.bsm_every
    dt = config.dt
    all_ids = [v.id for v in world.vehicles]

    for tick in range(config.n_ticks):
        t = tick * dt
        now_ms = round(t * 1000)

        if tick % bsm_every == 0:
            bsms = [Bsm(veh.id, now_ms, veh.x, veh.y, veh.heading, veh.speed,
                        veh.yaw_rate, veh.accel, veh.turn_signal)
                    for veh in world.vehicles]
            if bsm_sink is not None:
                for b in bsms:
                    bsm_sink(b)
            if channel.loss_prob <= 0.0:
                for b in bsms:
                    if b.sender_id != hv.id:
                        object_map.update(b, t)
            else:
                for rid, b in broadcast_bsms(bsms, channel, all_ids):
                    if rid == hv.id:
                        object_map.update(b, t)

        ph.append_sample(PathHistoryPoint(hv.x, hv.y, hv.heading,
                                          hv.speed, hv.yaw_rate, now_ms))

        direction = world.schedule_intent()
        if direction is not None:
            if method is not None:
                intent = latch.detect_application(
                    hv.turn_signal,
                    world.maneuver is not None and world.maneuver.status == EXECUTING,
                    hv.id, now_ms)
                if intent is not None:
                    hv_pose = world.world_pose(hv)
                    object_map.expire_stale(t)
                    trailing = find_trailing(object_map, hv.s, track,
                                             config.tv_dist_thresh)
                    cands = candidate_offsets(trailing, method, hv_pose, ph,
                                              track.lane_width)
                    rec = recognize_tv(cands, intent)
                    truth = ground_truth_tv(world, direction,
                                            config.tv_dist_thresh)
                    events.append(RecognitionEvent(
                        t=t, method=method, thresh=config.tv_dist_thresh,
                        predicted=rec.tv_id, truth=truth,
                        outcome=classify(rec.tv_id, truth)))
                    diagnostics.append(DiagnosticsRow(
                        t=t, method=method, thresh=config.tv_dist_thresh,
                        n_candidates=rec.candidates_considered,
                        chosen=rec.tv_id, offsets=_offsets_field(rec)))
                    if rec.tv_id is not None:
                        dim = issue_dim(intent, rec.tv_id, now_ms)
                        if channel.deliver():
                            world.apply_dim_brake(dim.target_id,
                                                  config.brake_delta)
            maneuver = world.start_lane_change(direction)
            if maneuver is not None:
                headway_log.note_maneuver_start(world, maneuver.to_lane)

        headway_log.sample(world, t)

        if truth_sink is not None:
            for veh in world.vehicles:
                truth_sink((t, veh.id, veh.s, veh.lane,
                            veh.lateral_offset, veh.speed, veh.yaw_rate,
                            SIGNAL_NAMES[veh.turn_signal]))

        world.step()

        if world.maneuver is not None and world.maneuver.status == DONE:
            world.maneuver = None
            headway_log.on_lane_change_complete(world, world.time)

    result = aggregate(config.mode, config.tv_dist_thresh, config.rng_seed,
                       events, headway_log.records,
                       n_lane_changes=world.completed_changes,
                       n_blocked_changes=world.blocked_changes)
    return RunArtifacts(config=config, result=result, events=events,
                        headways=headway_log.records, diagnostics=diagnostics)
