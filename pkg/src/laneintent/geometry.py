"""Closed ring-track geometry and track <-> world coordinate conversions.

The track is a closed loop of straight and constant-curvature arc segments.
Longitudinal position is the arc length ``s`` measured along the centerline
of lane 0 (the innermost lane); all lanes share this coordinate.  Lane ``k``
runs parallel at an offset of ``k * lane_width`` to the right of (outward
from) lane 0.  Headings are radians in [0, 2*pi), counterclockwise, 0 = +x.

Conventions used throughout the package:

* the ring is driven counterclockwise, so arc centers lie to the LEFT of
  the driving direction and "left" means toward lower lane indices;
* ``lateral_offset`` in a :class:`TrackPosition` is signed positive toward
  higher lane indices (rightward / outward).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


class OffRoadError(ValueError):
    """A world pose lies too far from every lane centerline to project."""


def norm_angle(a: float) -> float:
    """Normalize an angle to [0, 2*pi)."""
    a = math.fmod(a, TWO_PI)
    return a + TWO_PI if a < 0.0 else a


def wrap_pi(a: float) -> float:
    """Wrap an angle difference to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


@dataclass(frozen=True)
class WorldPose:
    x: float
    y: float
    heading: float  # rad in [0, 2*pi)


@dataclass(frozen=True)
class SegmentSpec:
    """One piece of the ring: a straight or a constant-curvature arc.

    ``curvature`` is signed 1/m (positive = left turn) and is 0 exactly when
    ``kind`` is ``"straight"``.  ``length`` is measured along the lane-0
    centerline.
    """

    kind: str
    length: float
    curvature: float
    start_pose: WorldPose

    def __post_init__(self) -> None:
        if self.kind not in ("straight", "arc"):
            raise ValueError(f"unknown segment kind {self.kind!r}")
        if (self.curvature == 0.0) != (self.kind == "straight"):
            raise ValueError("kind/curvature mismatch")
        if self.length <= 0.0:
            raise ValueError("segment length must be positive")

    def end_pose(self) -> WorldPose:
        return self.pose_at(self.length)

    def pose_at(self, u: float) -> WorldPose:
        """Centerline pose ``u`` meters into the segment."""
        x0, y0, h0 = self.start_pose.x, self.start_pose.y, self.start_pose.heading
        k = self.curvature
        if k == 0.0:
            return WorldPose(x0 + u * math.cos(h0), y0 + u * math.sin(h0), norm_angle(h0))
        # center sits 1/k to the left of the start pose; the point at u is
        # center - (1/k) * left(h0 + k*u)
        r = 1.0 / k
        cx = x0 - r * math.sin(h0)
        cy = y0 + r * math.cos(h0)
        h = h0 + k * u
        return WorldPose(cx + r * math.sin(h), cy - r * math.cos(h), norm_angle(h))


@dataclass(frozen=True)
class TrackPosition:
    """Track-frame position: arc length, lane index, and lateral deviation."""

    s: float
    lane: int
    lateral_offset: float = 0.0


@dataclass(frozen=True)
class TrackSpec:
    segments: tuple[SegmentSpec, ...]
    lane_count: int
    lane_width: float
    total_length: float
    seg_starts: tuple[float, ...]  # cumulative s of each segment start

    CLOSURE_POS_TOL = 1e-6
    CLOSURE_HEADING_TOL = 1e-9

    @classmethod
    def from_segments(cls, segments: tuple[SegmentSpec, ...], lane_count: int,
                      lane_width: float) -> "TrackSpec":
        if lane_count < 1:
            raise ValueError("lane_count must be >= 1")
        if lane_width <= 0.0:
            raise ValueError("lane_width must be positive")
        total = 0.0
        starts = []
        for seg in segments:
            starts.append(total)
            total += seg.length
        end = segments[-1].end_pose()
        start = segments[0].start_pose
        residual = math.hypot(end.x - start.x, end.y - start.y)
        if residual > cls.CLOSURE_POS_TOL:
            raise ValueError(f"segments do not close the loop (residual {residual:.3e} m)")
        if abs(wrap_pi(end.heading - start.heading)) > cls.CLOSURE_HEADING_TOL:
            raise ValueError("segments do not close the loop (heading mismatch)")
        return cls(tuple(segments), lane_count, lane_width, total, tuple(starts))

    def wrap_s(self, s: float) -> float:
        return s % self.total_length

    def segment_at(self, s: float) -> tuple[SegmentSpec, float]:
        """Segment containing ``s`` plus the local offset into it."""
        s = self.wrap_s(s)
        i = bisect_right(self.seg_starts, s) - 1
        return self.segments[i], s - self.seg_starts[i]


def build_octagon_track(straight_len: float, arc_radius: float,
                        lane_count: int = 3, lane_width: float = 3.5) -> TrackSpec:
    """Build the closed octagonal ring: 8 straights alternating with 8
    left-turn 45-degree arcs.

    ``arc_radius`` applies to the lane-0 centerline; it must exceed the total
    lane span so every lane keeps a positive turn radius.
    """
    if straight_len <= 0.0 or arc_radius <= 0.0:
        raise ValueError("straight_len and arc_radius must be positive")
    if lane_count < 1:
        raise ValueError("lane_count must be >= 1")
    if lane_width <= 0.0:
        raise ValueError("lane_width must be positive")
    if arc_radius <= lane_count * lane_width:
        raise ValueError(
            f"arc_radius {arc_radius} too small for {lane_count} lanes of {lane_width} m")

    k = 1.0 / arc_radius
    arc_len = arc_radius * math.pi / 4.0
    segments = []
    pose = WorldPose(0.0, 0.0, 0.0)
    for _ in range(8):
        seg = SegmentSpec("straight", straight_len, 0.0, pose)
        segments.append(seg)
        pose = seg.end_pose()
        seg = SegmentSpec("arc", arc_len, k, pose)
        segments.append(seg)
        pose = seg.end_pose()
    return TrackSpec.from_segments(tuple(segments), lane_count, lane_width)


def to_world(track: TrackSpec, pos: TrackPosition) -> WorldPose:
    """World pose of a track position.

    The pose sits ``lane * lane_width + lateral_offset`` to the right of the
    lane-0 centerline; the heading is the path tangent (lane-independent on
    concentric arcs).
    """
    if not 0 <= pos.lane < track.lane_count:
        raise ValueError(f"lane {pos.lane} out of range [0, {track.lane_count})")
    seg, u = track.segment_at(pos.s)
    base = seg.pose_at(u)
    d = pos.lane * track.lane_width + pos.lateral_offset
    h = base.heading
    return WorldPose(base.x + d * math.sin(h), base.y - d * math.cos(h), h)


def _project_segment(seg: SegmentSpec, x: float, y: float) -> tuple[float, float, float]:
    """Project a point onto one segment's lane-0 centerline.

    Returns (u, lateral, dist): local arc length (clamped to the segment),
    signed lateral offset (positive rightward), and the Euclidean distance to
    the clamped centerline point.
    """
    x0, y0, h0 = seg.start_pose.x, seg.start_pose.y, seg.start_pose.heading
    k = seg.curvature
    if k == 0.0:
        ux, uy = math.cos(h0), math.sin(h0)
        t = (x - x0) * ux + (y - y0) * uy
        tc = min(max(t, 0.0), seg.length)
        fx, fy = x0 + tc * ux, y0 + tc * uy
        lat = (x - fx) * uy - (y - fy) * ux  # dot with right(h0) = (sin,-cos) -> (uy,-ux)
        return tc, lat, math.hypot(x - fx, y - fy)

    r = 1.0 / k
    cx = x0 - r * math.sin(h0)
    cy = y0 + r * math.cos(h0)
    vx, vy = x - cx, y - cy
    rho = math.hypot(vx, vy)
    sweep = abs(k) * seg.length
    if rho < 1e-12:
        phi = 0.0  # degenerate: at the arc center, pick the segment start
    else:
        # radial angle of the point relative to the radial angle at u=0
        psi = math.atan2(vy, vx)
        psi0 = h0 - math.copysign(math.pi / 2.0, k)
        phi = norm_angle((psi - psi0) * math.copysign(1.0, k))
    if phi <= sweep:
        u = phi / abs(k)
        lat = math.copysign(1.0, k) * (rho - abs(r))
        return u, lat, abs(lat)
    # outside the angular span: clamp to the nearer arc endpoint
    u = seg.length if (phi - sweep) < (TWO_PI - phi) else 0.0
    end = seg.pose_at(u)
    h = end.heading
    lat = (x - end.x) * math.sin(h) - (y - end.y) * math.cos(h)
    return u, lat, math.hypot(x - end.x, y - end.y)


def project_to_track(track: TrackSpec, pose: WorldPose) -> TrackPosition:
    """Inverse of :func:`to_world`: the TrackPosition nearest a world pose.

    Lane assignment ties at an exact lane midline break toward the lower
    index.  Raises :class:`OffRoadError` when the pose is farther than
    ``lane_count * lane_width + 5`` m from every lane centerline.
    """
    best = None
    for i, seg in enumerate(track.segments):
        u, lat, dist = _project_segment(seg, pose.x, pose.y)
        if best is None or dist < best[0]:
            best = (dist, i, u, lat)
    _, i, u, d = best
    w = track.lane_width
    lane = math.ceil(d / w - 0.5)
    lane = min(max(lane, 0), track.lane_count - 1)
    off_center = abs(d - lane * w)
    if off_center > track.lane_count * w + 5.0:
        raise OffRoadError(
            f"pose ({pose.x:.1f}, {pose.y:.1f}) is {off_center:.1f} m from the nearest lane")
    s = track.wrap_s(track.seg_starts[i] + u)
    return TrackPosition(s=s, lane=lane, lateral_offset=d - lane * w)


def longitudinal_gap(track: TrackSpec, s_lead: float, s_follow: float) -> float:
    """Forward arc length from follower to leader along the driving direction."""
    return (s_lead - s_follow) % track.total_length
