import math
import random

import pytest

from laneintent.geometry import WorldPose
from laneintent.messaging import (Bsm, LocalObjectMap, SIGNAL_LEFT,
                                  SIGNAL_OFF, SIGNAL_RIGHT)
from laneintent.path_history import PathCoverageError
from laneintent.recognition import (CandidateOffset, IntentLatch,
                                    LaneChangeIntent, candidate_offsets,
                                    find_trailing, issue_dim,
                                    lane_offset_lateral, lane_offset_ph,
                                    recognize_tv)
from trajectories import LANE_WIDTH, buffer_from, circle_trail, straight_trail


def bsm_at(sender, x, y, heading=0.0, ts=0):
    return Bsm(sender, ts, x, y, heading, 20.0, 0.0, 0.0)


def intent(direction=SIGNAL_LEFT):
    return LaneChangeIntent(hv_id=0, direction=direction, detected_at=0)


# ----------------------------------------------------------------------
# application detection

def test_detect_edge_triggered_once():
    latch = IntentLatch()
    assert latch.detect_application(SIGNAL_OFF, False, 0, 0) is None
    got = latch.detect_application(SIGNAL_LEFT, False, 0, 100)
    assert got is not None and got.direction == SIGNAL_LEFT
    for k in range(5):
        assert latch.detect_application(SIGNAL_LEFT, False, 0, 200 + k) is None
    assert latch.detect_application(SIGNAL_OFF, False, 0, 300) is None
    again = latch.detect_application(SIGNAL_LEFT, False, 0, 400)
    assert again is not None


def test_detect_suppressed_while_maneuvering():
    latch = IntentLatch()
    assert latch.detect_application(SIGNAL_LEFT, True, 0, 0) is None


# ----------------------------------------------------------------------
# trailing filter

def _map_with(track, entries):
    from laneintent.geometry import TrackPosition, to_world
    m = LocalObjectMap()
    for vid, s, lane in entries:
        pose = to_world(track, TrackPosition(s, lane))
        m.update(bsm_at(vid, pose.x, pose.y, pose.heading), 0.0)
    return m


def test_find_trailing_includes_within_threshold(track):
    m = _map_with(track, [(1, 60.0, 1)])
    got = find_trailing(m, 100.0, track, 50.0)
    assert [b.sender_id for b, _ in got] == [1]
    assert got[0][1] == pytest.approx(40.0)


def test_find_trailing_excludes_ahead(track):
    m = _map_with(track, [(1, 120.0, 1)])
    assert find_trailing(m, 100.0, track, 50.0) == []


def test_find_trailing_threshold_boundary(track):
    m = _map_with(track, [(1, 40.0, 1)])
    assert find_trailing(m, 100.0, track, 50.0) == []
    assert len(find_trailing(m, 100.0, track, 60.0)) == 1


def test_find_trailing_orders_nearest_first(track):
    m = _map_with(track, [(1, 20.0, 1), (2, 70.0, 0), (3, 55.0, 2)])
    got = find_trailing(m, 100.0, track, 100.0)
    assert [b.sender_id for b, _ in got] == [2, 3, 1]


# ----------------------------------------------------------------------
# lane offsets

def test_ph_offset_same_lane_zero():
    buf = buffer_from(straight_trail(20.0, lambda t: 22.0))
    p = buf.points[30]
    raw, off = lane_offset_ph(buf, (p.x, p.y), LANE_WIDTH)
    assert off == 0
    assert raw == pytest.approx(0.0, abs=1e-9)


def test_ph_offset_one_lane_left():
    buf = buffer_from(straight_trail(20.0, lambda t: 22.0))
    p = buf.points[30]
    raw, off = lane_offset_ph(buf, (p.x, p.y + LANE_WIDTH), LANE_WIDTH)
    assert off == 1
    assert raw == pytest.approx(1.0)


def test_ph_offset_corrects_for_host_lane_change():
    # host changed one lane left since passing the candidate
    buf = buffer_from(straight_trail(30.0, lambda t: 22.0,
                                     maneuvers=[(10.0, +1)]))
    p = buf.points[20]  # before the maneuver
    raw, off = lane_offset_ph(buf, (p.x, p.y + LANE_WIDTH), LANE_WIDTH)
    assert off == 0  # same lane as the host is in now


def test_ph_offset_no_coverage():
    buf = buffer_from(straight_trail(5.0, lambda t: 22.0))
    with pytest.raises(PathCoverageError):
        lane_offset_ph(buf, (-40.0, 0.0), LANE_WIDTH)


def test_lateral_offset_cases():
    hv = WorldPose(100.0, 0.0, 0.0)
    raw, off = lane_offset_lateral(hv, (60.0, 0.0), LANE_WIDTH)
    assert off == 0
    raw, off = lane_offset_lateral(hv, (60.0, LANE_WIDTH), LANE_WIDTH)
    assert off == 1
    raw, off = lane_offset_lateral(hv, (60.0, -LANE_WIDTH), LANE_WIDTH)
    assert off == -1


def test_ambiguous_offset_skipped():
    hv = WorldPose(0.0, 0.0, 0.0)
    # halfway between lanes: |raw - round| above the ambiguity bound
    raw, off = lane_offset_lateral(hv, (-30.0, 0.55 * LANE_WIDTH), LANE_WIDTH)
    assert off is None


def test_arc_contrast_ph_right_lateral_wrong():
    """On circular driving, a candidate 80 m back in the same lane reads 0
    via the trail but wildly nonzero via the perpendicular baseline."""
    buf = buffer_from(circle_trail(40.0, 30.0, lambda t: 22.0))
    # candidate exactly on the trail, ~80 m back along the arc
    target = None
    total = 0.0
    pts = buf.points
    for i in range(len(pts) - 1, 0, -1):
        total += math.hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y)
        if total >= 80.0:
            target = pts[i - 1]
            break
    raw, off = lane_offset_ph(buf, (target.x, target.y), LANE_WIDTH)
    assert off == 0
    hv_now = WorldPose(pts[-1].x, pts[-1].y, pts[-1].heading)
    raw_lat, off_lat = lane_offset_lateral(hv_now, (target.x, target.y),
                                           LANE_WIDTH)
    assert abs(raw_lat) * LANE_WIDTH > LANE_WIDTH / 2  # far off the truth
    assert off_lat != 0  # wrong (nonzero or ambiguous-but-large)


# ----------------------------------------------------------------------
# target selection

def cand(vid, gap, off):
    return CandidateOffset(vehicle_id=vid, gap=gap, raw_offset=off,
                           lane_offset=off)


def test_recognize_picks_nearest_in_target_lane():
    got = recognize_tv([cand(1, 30.0, 1), cand(2, 45.0, 1)], intent())
    assert got.tv_id == 1


def test_recognize_none_when_all_own_lane():
    got = recognize_tv([cand(1, 30.0, 0), cand(2, 45.0, 0)], intent())
    assert got.tv_id is None
    assert got.candidates_considered == 2


def test_recognize_lane_filter_before_distance():
    got = recognize_tv([cand(1, 20.0, 0), cand(2, 45.0, 1)], intent())
    assert got.tv_id == 2


def test_recognize_right_intent_wants_minus_one():
    got = recognize_tv([cand(1, 30.0, 1), cand(2, 45.0, -1)],
                       intent(SIGNAL_RIGHT))
    assert got.tv_id == 2


def test_recognize_never_picks_two_lanes_over():
    got = recognize_tv([cand(1, 30.0, 2), cand(2, 45.0, -2)], intent())
    assert got.tv_id is None


def test_recognize_matches_brute_force_oracle():
    """Randomized micro-scenarios with supplied ground-truth offsets."""
    rng = random.Random(99)
    for _ in range(500):
        n = rng.randrange(0, 8)
        cands = sorted((cand(i, rng.uniform(1.0, 150.0),
                             rng.choice([None, -2, -1, 0, 1, 2]))
                        for i in range(n)), key=lambda c: c.gap)
        direction = rng.choice([SIGNAL_LEFT, SIGNAL_RIGHT])
        wanted = 1 if direction == SIGNAL_LEFT else -1
        qualifying = [c for c in cands if c.lane_offset == wanted]
        expect = min(qualifying, key=lambda c: c.gap).vehicle_id if qualifying else None
        assert recognize_tv(cands, intent(direction)).tv_id == expect


def test_recognition_rigid_motion_invariant():
    """Rotating and translating the whole scene leaves the choice fixed."""
    angle, dx, dy = 0.8, -200.0, 90.0
    ca, sa = math.cos(angle), math.sin(angle)
    poses = straight_trail(20.0, lambda t: 22.0)
    moved = [(ts, x * ca - y * sa + dx, x * sa + y * ca + dy, h + angle, v)
             for ts, x, y, h, v in poses]
    hv0 = poses[-1]
    hv1 = moved[-1]
    trailing0, trailing1 = [], []
    for vid, back, lat in ((1, 40.0, LANE_WIDTH), (2, 25.0, 0.0)):
        x, y = hv0[1] - back, lat
        trailing0.append((bsm_at(vid, x, y), back))
        trailing1.append((bsm_at(vid, x * ca - y * sa + dx,
                                 x * sa + y * ca + dy), back))
    for method in ("path_history", "lateral_only"):
        got0 = recognize_tv(candidate_offsets(
            trailing0, method, WorldPose(hv0[1], hv0[2], hv0[3]),
            buffer_from(poses), LANE_WIDTH), intent())
        got1 = recognize_tv(candidate_offsets(
            trailing1, method, WorldPose(hv1[1], hv1[2], hv1[3]),
            buffer_from(moved), LANE_WIDTH), intent())
        assert got0.tv_id == got1.tv_id == 1


def test_issue_dim_well_formed():
    d = issue_dim(intent(), tv_id=7, now_ms=1234)
    assert d.target_id == 7
    assert d.sender_id == 0
    assert d.direction == SIGNAL_LEFT
    assert d.timestamp == 1234


def test_dms_config_validation():
    from laneintent.recognition import DmsConfig
    DmsConfig(tv_dist_thresh=100.0, recognition_method="path_history",
              lane_width=3.5)
    with pytest.raises(ValueError):
        DmsConfig(tv_dist_thresh=0.0, recognition_method="path_history",
                  lane_width=3.5)
    with pytest.raises(ValueError):
        DmsConfig(tv_dist_thresh=50.0, recognition_method="psychic",
                  lane_width=3.5)


def test_both_methods_match_oracle_on_straight():
    """On a straight stretch both offset methods agree with the truth for
    every candidate placement."""
    rng = random.Random(5)
    poses = straight_trail(30.0, lambda t: 22.0)
    hv = poses[-1]
    buf = buffer_from(poses)
    hv_pose = WorldPose(hv[1], hv[2], hv[3])
    for _ in range(200):
        true_lanes = rng.choice([-1, 0, 1])
        back = rng.uniform(5.0, 100.0)
        pos = (hv[1] - back, true_lanes * LANE_WIDTH)
        _, off_ph = lane_offset_ph(buf, pos, LANE_WIDTH)
        _, off_lat = lane_offset_lateral(hv_pose, pos, LANE_WIDTH)
        assert off_ph == off_lat == true_lanes
