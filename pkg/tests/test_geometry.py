import math

import pytest
from hypothesis import given, settings, strategies as st

from laneintent.geometry import (OffRoadError, TrackPosition, WorldPose,
                                 build_octagon_track, longitudinal_gap,
                                 project_to_track, to_world)

STRAIGHT = 80.0
RADIUS = 40.0


def test_total_length_closed_form(track):
    expected = 8.0 * (STRAIGHT + RADIUS * math.pi / 4.0)
    assert track.total_length == pytest.approx(expected, abs=1e-9)


def test_total_length_matches_numerical_integration(track):
    # independent oracle: sum chord lengths of a dense centerline sampling
    n = 200000
    ds = track.total_length / n
    total = 0.0
    prev = to_world(track, TrackPosition(0.0, 0))
    for i in range(1, n + 1):
        cur = to_world(track, TrackPosition(i * ds % track.total_length, 0))
        total += math.hypot(cur.x - prev.x, cur.y - prev.y)
        prev = cur
    assert total == pytest.approx(track.total_length, rel=1e-6)


def test_loop_closure(track):
    end = track.segments[-1].end_pose()
    start = track.segments[0].start_pose
    assert math.hypot(end.x - start.x, end.y - start.y) < 1e-6
    assert abs((end.heading - start.heading + math.pi) % (2 * math.pi) - math.pi) < 1e-9


def test_segment_sweep_is_45_degrees(track):
    for seg in track.segments:
        if seg.kind == "arc":
            assert abs(seg.curvature) * seg.length == pytest.approx(math.pi / 4)


def test_build_rejects_bad_dimensions():
    with pytest.raises(ValueError):
        build_octagon_track(-1.0, 40.0)
    with pytest.raises(ValueError):
        build_octagon_track(80.0, 0.0)
    with pytest.raises(ValueError):
        build_octagon_track(80.0, 40.0, lane_count=0)
    # innermost-lane radius check: 10 <= 3 * 3.5
    with pytest.raises(ValueError):
        build_octagon_track(80.0, 10.0, lane_count=3, lane_width=3.5)


def test_to_world_datum(track):
    pose = to_world(track, TrackPosition(0.0, 0))
    start = track.segments[0].start_pose
    assert (pose.x, pose.y, pose.heading) == (start.x, start.y, start.heading)


def test_to_world_straight_translation(track):
    pose = to_world(track, TrackPosition(40.0, 0))
    start = track.segments[0].start_pose
    assert pose.x == pytest.approx(start.x + 40.0)
    assert pose.y == pytest.approx(start.y)
    assert pose.heading == pytest.approx(0.0)


def test_arc_midpoint_heading_by_finite_difference(track):
    s_mid = STRAIGHT + (RADIUS * math.pi / 4.0) / 2.0
    pose = to_world(track, TrackPosition(s_mid, 0))
    assert pose.heading == pytest.approx(math.pi / 8.0, abs=1e-9)
    # finite difference of positions reproduces the tangent
    eps = 1e-4
    ahead = to_world(track, TrackPosition(s_mid + eps, 0))
    behind = to_world(track, TrackPosition(s_mid - eps, 0))
    fd_heading = math.atan2(ahead.y - behind.y, ahead.x - behind.x)
    assert fd_heading == pytest.approx(pose.heading, abs=1e-6)


def test_lane_offset_outward(track):
    inner = to_world(track, TrackPosition(40.0, 0))
    outer = to_world(track, TrackPosition(40.0, 2))
    # start heading 0 (east); outward = right = -y
    assert outer.y == pytest.approx(inner.y - 2 * 3.5)
    assert outer.x == pytest.approx(inner.x)


def test_to_world_rejects_bad_lane(track):
    with pytest.raises(ValueError):
        to_world(track, TrackPosition(0.0, 3))


@settings(max_examples=300, deadline=None)
@given(s=st.floats(0.0, 891.0), lane=st.integers(0, 2),
       off=st.floats(-1.7, 1.7))
def test_projection_round_trip(track, s, lane, off):
    p = TrackPosition(s, lane, off)
    q = project_to_track(track, to_world(track, p))
    ds = abs(q.s - p.s)
    ds = min(ds, track.total_length - ds)
    assert ds < 1e-6
    assert q.lane == p.lane
    assert q.lateral_offset == pytest.approx(p.lateral_offset, abs=1e-6)


def test_projection_tie_breaks_toward_lower_lane(track):
    # 1.75 m outward of lane-0 centerline = exact lane-0/1 midline
    pose = to_world(track, TrackPosition(40.0, 0, 1.75))
    q = project_to_track(track, pose)
    assert q.lane == 0
    assert q.lateral_offset == pytest.approx(1.75)


def test_projection_off_road_error(track):
    start = track.segments[0].start_pose
    with pytest.raises(OffRoadError):
        project_to_track(track, WorldPose(start.x, start.y + 50.0, 0.0))


def test_curvature_by_finite_difference(track):
    arc = track.segments[1]
    s0 = track.seg_starts[1]
    ds = 0.05
    for i in range(1, int(arc.length / ds) - 1):
        a = to_world(track, TrackPosition(s0 + i * ds, 0))
        b = to_world(track, TrackPosition(s0 + (i + 1) * ds, 0))
        dh = (b.heading - a.heading + math.pi) % (2 * math.pi) - math.pi
        assert dh / ds == pytest.approx(arc.curvature, abs=1e-4)


def test_longitudinal_gap_simple(track):
    assert longitudinal_gap(track, 50.0, 20.0) == pytest.approx(30.0)
    assert longitudinal_gap(track, 10.0, 10.0) == 0.0


def test_longitudinal_gap_wraps(track):
    L = track.total_length
    gap = longitudinal_gap(track, 10.0, 880.0)
    assert gap == pytest.approx(L - 870.0, abs=1e-9)
    # oracle: step the follower forward until it coincides with the leader
    step = 1e-3
    s, travelled = 880.0, 0.0
    while abs(s - 10.0) > step and travelled < L:
        s = (s + step) % L
        travelled += step
    assert gap == pytest.approx(travelled, abs=0.01)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0.0, 891.0), b=st.floats(0.0, 891.0))
def test_gap_antisymmetry(track, a, b):
    if abs(a - b) < 1e-12:
        return
    total = longitudinal_gap(track, a, b) + longitudinal_gap(track, b, a)
    assert total == pytest.approx(track.total_length, abs=1e-6)
