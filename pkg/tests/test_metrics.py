import itertools

import pytest

from laneintent.messaging import SIGNAL_LEFT, SIGNAL_RIGHT
from laneintent.metrics import (HeadwayLog, Outcome, RecognitionEvent,
                                aggregate, classify, ground_truth_tv,
                                headway_sample)
from laneintent.sim import SimConfig, World


def test_classification_truth_table_exhaustive():
    cases = {
        (None, None): Outcome.TN,
        (None, 7): Outcome.FN,
        (None, 9): Outcome.FN,
        (7, None): Outcome.FP,
        (9, None): Outcome.FP,
        (7, 7): Outcome.TP,
        (9, 9): Outcome.TP,
        (7, 9): Outcome.FP,  # wrong vehicle alerted
        (9, 7): Outcome.FP,
    }
    for (pred, truth), want in cases.items():
        assert classify(pred, truth) is want
    # every pair lands in exactly one bucket
    for pred, truth in itertools.product((None, 7, 9), repeat=2):
        assert classify(pred, truth) in Outcome


def make_world(track, entries, hv_lane=1, hv_s=200.0):
    """World with the host plus explicitly placed remotes (id, s, lane)."""
    world = World(track, SimConfig(n_vehicles=len(entries) + 1,
                                   duration=10.0, intent_period=0.0,
                                   speed_factor_range=(1.0, 1.0)))
    for chain in world.lane_chains:
        chain.clear()
    hv = world.vehicles[0]
    hv.s, hv.lane = hv_s, hv_lane
    world.lane_chains[hv_lane].append(0)
    for veh, (vid, s, lane) in zip(world.vehicles[1:], entries):
        veh.s, veh.lane = s, lane
        world.lane_chains[lane].append(veh.id)
    for chain in world.lane_chains:
        chain.sort(key=lambda vid: world.vehicles[vid].s)
    return world


def test_ground_truth_single_trailing(track):
    world = make_world(track, [(1, 160.0, 0)])
    assert ground_truth_tv(world, SIGNAL_LEFT, 50.0) == 1


def test_ground_truth_none_when_lane_empty(track):
    world = make_world(track, [(1, 160.0, 2)])
    assert ground_truth_tv(world, SIGNAL_LEFT, 50.0) is None


def test_ground_truth_minimum_gap_wins(track):
    world = make_world(track, [(1, 170.0, 0), (2, 140.0, 0)])
    assert ground_truth_tv(world, SIGNAL_LEFT, 100.0) == 1


def test_ground_truth_respects_direction(track):
    world = make_world(track, [(1, 170.0, 0), (2, 180.0, 2)])
    assert ground_truth_tv(world, SIGNAL_LEFT, 100.0) == 1
    assert ground_truth_tv(world, SIGNAL_RIGHT, 100.0) == 2


def test_headway_sample_ratio():
    rec = headway_sample(t=0.0, gap=30.0, tv_speed=15.0, window_id=1,
                         initial_gap=30.0)
    assert rec.time_headway == pytest.approx(2.0)
    assert rec.space_headway == pytest.approx(30.0)


def test_headway_sample_zero_gap():
    rec = headway_sample(0.0, 0.0, 15.0, 1, 0.0)
    assert rec.time_headway == 0.0
    assert rec.space_headway == 0.0


def test_headway_sample_caps_near_rest():
    rec = headway_sample(0.0, 30.0, 0.0, 1, 30.0)
    assert rec.time_headway == 99.0
    rec = headway_sample(0.0, 30.0, 0.05, 1, 30.0)
    assert rec.time_headway == 99.0


def test_headway_window_empty_lane(track):
    world = make_world(track, [(1, 100.0, 2)], hv_lane=1)
    log = HeadwayLog(track, 10.0)
    log.on_lane_change_complete(world, 5.0)
    log.sample(world, 5.1)
    assert log.records == []


def test_headway_window_records_against_trailing(track):
    world = make_world(track, [(1, 170.0, 1), (2, 120.0, 1)], hv_lane=1)
    log = HeadwayLog(track, 10.0)
    log.note_maneuver_start(world, 1)
    log.on_lane_change_complete(world, 5.0)
    assert len(log.records) == 1
    rec = log.records[0]
    assert rec.space_headway == pytest.approx(30.0)  # nearest trailing, id 1
    assert rec.initial_gap == pytest.approx(30.0)
    log.sample(world, 5.1)
    assert len(log.records) == 2


def test_headway_window_respects_max_initial_gap(track):
    world = make_world(track, [(1, 120.0, 1)], hv_lane=1)
    log = HeadwayLog(track, 10.0, max_initial_gap=50.0)
    log.note_maneuver_start(world, 1)
    log.on_lane_change_complete(world, 5.0)
    assert log.records == []  # 80 m away: beyond the relevance horizon


def ev(outcome, t=0.0):
    pred = 1 if outcome in (Outcome.TP, Outcome.FP) else None
    truth = 1 if outcome in (Outcome.TP, Outcome.FN) else None
    return RecognitionEvent(t=t, method="path_history", thresh=100.0,
                            predicted=pred, truth=truth, outcome=outcome)


def test_aggregate_all_tp():
    result = aggregate("dms_ph", 100.0, 1, [ev(Outcome.TP)] * 10, [])
    assert result.percent["TP"] == 100.0
    assert result.counts == {"TP": 10, "FP": 0, "TN": 0, "FN": 0}


def test_aggregate_counts_partition():
    events = ([ev(Outcome.TP)] * 3 + [ev(Outcome.FP)] * 2 +
              [ev(Outcome.TN)] * 4 + [ev(Outcome.FN)])
    result = aggregate("dms_ph", 100.0, 1, events, [])
    assert sum(result.counts.values()) == result.n_events == len(events)


def test_aggregate_bins_by_initial_distance():
    records = [headway_sample(0.0, 30.0, 15.0, 1, 12.0),
               headway_sample(0.1, 34.0, 15.0, 1, 12.0),
               headway_sample(0.0, 60.0, 15.0, 2, 47.0)]
    result = aggregate("dms_ph", 100.0, 1, [], records)
    assert [b["bin_low_m"] for b in result.headway_bins] == [10.0, 40.0]
    assert result.headway_bins[0]["mean_space_headway_m"] == pytest.approx(32.0)
    assert result.headway_bins[0]["n_samples"] == 2
