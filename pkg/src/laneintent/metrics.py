"""Ground-truth oracle, recognition outcome classification, and headways.

The oracle reads only true simulator state (arc positions and lane
indices), never message-derived geometry, so it grades the recognizer
independently.  Each intent event is classified into exactly one of
TP/FP/TN/FN; a prediction naming the wrong vehicle counts as FP (the wrong
driver was alerted) with the truth id retained in the event record.

Headways between the host and the true trailing vehicle in its new lane
are sampled for a fixed window after every completed host lane change:
space headway is the longitudinal gap, time headway the gap over the
trailing vehicle's speed, capped when the trailing vehicle is near rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .geometry import TrackSpec, longitudinal_gap
from .messaging import SIGNAL_LEFT
from .sim import World

TIME_HEADWAY_CAP = 99.0
SPEED_FLOOR = 0.1
HEADWAY_BIN_M = 10.0


class Outcome(Enum):
    TP = "TP"
    FP = "FP"
    TN = "TN"
    FN = "FN"


@dataclass(frozen=True)
class RecognitionEvent:
    t: float
    method: str
    thresh: float
    predicted: int | None
    truth: int | None
    outcome: Outcome | None  # None when the event was not scored


@dataclass(frozen=True)
class HeadwayRecord:
    t: float
    time_headway: float
    space_headway: float
    window_id: int
    initial_gap: float


def classify(predicted: int | None, truth: int | None) -> Outcome:
    """Four-way outcome; a mismatched prediction is a false positive."""
    if predicted is None:
        return Outcome.TN if truth is None else Outcome.FN
    if truth is None:
        return Outcome.FP
    return Outcome.TP if predicted == truth else Outcome.FP


def ground_truth_tv(world: World, direction: int, thresh: float) -> int | None:
    """True target: nearest trailing vehicle within ``thresh`` whose true
    lane is the host's adjacent lane on the intent side."""
    hv = world.hv
    target_lane = hv.lane + (-1 if direction == SIGNAL_LEFT else 1)
    if not 0 <= target_lane < world.track.lane_count:
        return None
    best_id, best_gap = None, math.inf
    for veh in world.vehicles:
        if veh.id == hv.id or veh.lane != target_lane:
            continue
        gap = longitudinal_gap(world.track, hv.s, veh.s)
        if 0.0 < gap <= thresh and gap < best_gap:
            best_id, best_gap = veh.id, gap
    return best_id


def headway_sample(t: float, gap: float, tv_speed: float, window_id: int,
                   initial_gap: float) -> HeadwayRecord:
    th = TIME_HEADWAY_CAP if tv_speed < SPEED_FLOOR else gap / tv_speed
    return HeadwayRecord(t=t, time_headway=th, space_headway=gap,
                         window_id=window_id, initial_gap=initial_gap)


@dataclass
class HeadwayWindow:
    window_id: int
    tv_id: int
    lane: int
    opened_at: float
    ends_at: float
    initial_gap: float


class HeadwayLog:
    """Opens a window after each completed host lane change and samples the
    gap to the true trailing vehicle in the new lane every tick.

    A window only opens when that vehicle was within ``max_initial_gap``
    (the run's TV distance threshold) behind the host at maneuver start:
    the metric measures the interaction with the vehicle the host cut in
    front of, not ambient spacing to far-away traffic.  The window's
    ``initial_gap`` (the distance the headway series is binned by) is the
    gap at maneuver start, supplied via ``note_maneuver_start``; measuring
    it before any intent-message braking can act keeps the bins comparable
    across scenario modes.
    """

    def __init__(self, track: TrackSpec, window_s: float,
                 max_initial_gap: float = math.inf):
        self.track = track
        self.window_s = window_s
        self.max_initial_gap = max_initial_gap
        self.records: list[HeadwayRecord] = []
        self._active: HeadwayWindow | None = None
        self._start_gaps: dict[int, float] = {}
        self._n_windows = 0

    def note_maneuver_start(self, world: World, target_lane: int) -> None:
        hv = world.hv
        self._start_gaps = {
            world.vehicles[vid].id: longitudinal_gap(self.track, hv.s,
                                                     world.vehicles[vid].s)
            for vid in world.lane_chains[target_lane]}

    def on_lane_change_complete(self, world: World, t: float) -> None:
        hv = world.hv
        tv = None
        best_gap = math.inf
        for veh in world.vehicles:
            if veh.id == hv.id or veh.lane != hv.lane:
                continue
            gap = longitudinal_gap(self.track, hv.s, veh.s)
            if 0.0 < gap < best_gap:
                tv, best_gap = veh, gap
        start_gaps, self._start_gaps = self._start_gaps, {}
        if tv is None:
            self._active = None
            return
        initial_gap = start_gaps.get(tv.id, best_gap)
        if initial_gap > self.max_initial_gap:
            self._active = None
            return
        self._n_windows += 1
        self._active = HeadwayWindow(
            window_id=self._n_windows, tv_id=tv.id, lane=hv.lane,
            opened_at=t, ends_at=t + self.window_s, initial_gap=initial_gap)
        self.sample(world, t)

    def sample(self, world: World, t: float) -> None:
        win = self._active
        if win is None:
            return
        if t > win.ends_at + 1e-9:
            self._active = None
            return
        hv = world.hv
        tv = world.vehicles[win.tv_id]
        # recorded only while both still share the lane the host changed into
        if hv.lane != win.lane or tv.lane != win.lane:
            return
        gap = longitudinal_gap(self.track, hv.s, tv.s)
        self.records.append(headway_sample(t, gap, tv.speed, win.window_id,
                                           win.initial_gap))


@dataclass
class ExperimentResult:
    """Aggregated outcome counts and headway statistics for one run."""

    mode: str
    thresh: float
    seed: int
    counts: dict[str, int]
    n_events: int
    percent: dict[str, float]
    n_headway_samples: int
    mean_space_headway: float | None
    mean_time_headway: float | None
    headway_bins: list[dict[str, float]]
    n_lane_changes: int = 0
    n_blocked_changes: int = 0

    @property
    def accuracy(self) -> float | None:
        if self.n_events == 0:
            return None
        return (self.counts["TP"] + self.counts["TN"]) / self.n_events


def aggregate(mode: str, thresh: float, seed: int,
              events: list[RecognitionEvent],
              headways: list[HeadwayRecord],
              n_lane_changes: int = 0,
              n_blocked_changes: int = 0) -> ExperimentResult:
    counts = {o.value: 0 for o in Outcome}
    for ev in events:
        counts[ev.outcome.value] += 1
    n = len(events)
    percent = {k: (100.0 * v / n if n else 0.0) for k, v in counts.items()}

    bins: dict[int, list[float]] = {}
    for rec in headways:
        bins.setdefault(int(rec.initial_gap // HEADWAY_BIN_M), []).append(
            rec.space_headway)
    bin_rows = [
        {"bin_low_m": b * HEADWAY_BIN_M,
         "bin_high_m": (b + 1) * HEADWAY_BIN_M,
         "n_samples": len(vals),
         "mean_space_headway_m": sum(vals) / len(vals)}
        for b, vals in sorted(bins.items())
    ]
    n_h = len(headways)
    return ExperimentResult(
        mode=mode, thresh=thresh, seed=seed, counts=counts, n_events=n,
        percent=percent, n_headway_samples=n_h,
        mean_space_headway=(sum(r.space_headway for r in headways) / n_h
                            if n_h else None),
        mean_time_headway=(sum(r.time_headway for r in headways) / n_h
                           if n_h else None),
        headway_bins=bin_rows,
        n_lane_changes=n_lane_changes,
        n_blocked_changes=n_blocked_changes,
    )
