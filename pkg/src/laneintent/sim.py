"""Fixed-timestep vehicle dynamics on the ring track.

Each lane is a cyclic follow-chain: followers bound their speed by the
Krauss safe speed toward their same-lane leader, positions advance along
the shared arc-length coordinate, and the chain order never changes except
when the host vehicle moves between lanes.  Only the host changes lanes;
remote vehicles hold their lane for the whole run.

A lane change is a timed maneuver with a linear lateral profile.  While it
executes, the host and the nearest target-lane neighbors additionally bound
their speeds against each other (the host is visibly drifting across), and
the host's chain membership and lane index flip when the maneuver
completes.  Vehicle headings carry the lane-change slip angle on top of the
path tangent, and yaw rates are the per-tick heading deltas, so broadcast
kinematics contain the signal that path-history lane-change detection
relies on.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .geometry import TrackPosition, TrackSpec, WorldPose, to_world
from .messaging import SIGNAL_LEFT, SIGNAL_OFF, SIGNAL_RIGHT

MODES = ("dms_ph", "dms_lateral", "no_dms")

# maneuver status values
PENDING, EXECUTING, DONE, ABORTED = "pending", "executing", "done", "aborted"

TWO_PI = 2.0 * math.pi


class SimulationIntegrityError(RuntimeError):
    """Same-lane bumper overlap: the dynamics invariant was violated."""


def krauss_safe_speed(v_leader: float, v_follower: float, gap: float,
                      decel_cap: float, reaction_time: float) -> float:
    """Collision-avoiding speed bound for the follower.

    v_safe = v_l + (gap - v_l * tau) / ((v_l + v_f) / (2 b) + tau), clamped
    to be non-negative.
    """
    if gap < 0.0:
        raise ValueError("gap must be non-negative")
    if decel_cap <= 0.0 or reaction_time <= 0.0:
        raise ValueError("decel_cap and reaction_time must be positive")
    v_safe = v_leader + (gap - v_leader * reaction_time) / (
        (v_leader + v_follower) / (2.0 * decel_cap) + reaction_time)
    return max(0.0, v_safe)


@dataclass(frozen=True)
class SimConfig:
    """Run parameters.  Defaults reproduce the reference ring-road setup."""

    n_vehicles: int = 23
    duration: float = 20000.0
    dt: float = 0.1
    speed_classes: tuple[tuple[float, float], ...] = ((22.0, 3.5), (36.0, 7.0))
    intent_period: float = 30.0  # 0 disables host lane-change intents
    tv_dist_thresh: float = 100.0
    mode: str = "dms_ph"
    brake_delta: float = 3.0
    headway_window: float = 10.0
    rng_seed: int = 0
    bsm_rate: float = 10.0
    channel_loss_prob: float = 0.0
    # after a DIM the target holds its reduced speed this long (the braking
    # accompanies the host's maneuver) before normal car-following resumes
    brake_hold: float = 3.0

    # initial-placement randomization; scenario modes being compared should
    # share a placement_seed so they start from the identical world
    placement_seed: int = 0
    speed_factor_range: tuple[float, float] = (0.9, 1.1)

    # car-following and maneuver parameters
    reaction_time: float = 1.0
    decel_cap: float = 4.5
    min_gap: float = 2.0
    lane_change_duration: float = 3.0
    vehicle_length: float = 5.0

    # host-side recognition parameters
    staleness_timeout: float = 1.0
    max_path_length: float = 300.0
    min_sample_spacing: float = 1.0

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.n_vehicles < 2:
            raise ValueError("need at least 2 vehicles")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0.0 <= self.channel_loss_prob <= 1.0:
            raise ValueError("channel_loss_prob must be in [0, 1]")
        if not self.speed_classes:
            raise ValueError("need at least one speed class")
        lo, hi = self.speed_factor_range
        if not 0.0 < lo <= hi:
            raise ValueError("speed_factor_range must be 0 < lo <= hi")
        for name, period in (("duration", self.duration),
                             ("intent_period", self.intent_period)):
            ticks = round(period / self.dt)
            if abs(ticks * self.dt - period) > 1e-6:
                raise ValueError(f"{name} must be a multiple of dt")
        if self.tv_dist_thresh <= 0.0:
            raise ValueError("tv_dist_thresh must be positive")

    @property
    def n_ticks(self) -> int:
        return round(self.duration / self.dt)

    @property
    def bsm_every(self) -> int:
        return max(1, round(1.0 / (self.bsm_rate * self.dt)))


class VehicleState:
    """Kinematic state of one vehicle (mutable, updated in place)."""

    __slots__ = ("id", "s", "lane", "lateral_offset", "speed", "v_max",
                 "accel_cap", "decel_cap", "length", "is_hv", "heading",
                 "yaw_rate", "accel", "turn_signal", "lat_rate", "x", "y",
                 "seg_idx", "brake_cap", "brake_until")

    def __init__(self, id: int, s: float, lane: int, speed: float,
                 v_max: float, accel_cap: float, decel_cap: float,
                 length: float, is_hv: bool = False):
        self.id = id
        self.s = s
        self.lane = lane
        self.lateral_offset = 0.0
        self.speed = speed
        self.v_max = v_max
        self.accel_cap = accel_cap
        self.decel_cap = decel_cap
        self.length = length
        self.is_hv = is_hv
        self.heading = 0.0
        self.yaw_rate = 0.0
        self.accel = 0.0
        self.turn_signal = SIGNAL_OFF
        self.lat_rate = 0.0  # d(lateral_offset)/dt, rightward positive
        self.x = 0.0  # world position, kept in sync by World.step
        self.y = 0.0
        self.seg_idx = 0
        self.brake_cap = math.inf  # DIM brake hold: speed cap and its expiry
        self.brake_until = -math.inf

    @property
    def pos(self) -> TrackPosition:
        return TrackPosition(self.s, self.lane, self.lateral_offset)


@dataclass
class LaneChangeManeuver:
    vehicle_id: int
    from_lane: int
    to_lane: int
    start_time: float
    duration: float
    status: str = EXECUTING
    elapsed: float = 0.0

    @property
    def direction(self) -> int:
        return SIGNAL_LEFT if self.to_lane < self.from_lane else SIGNAL_RIGHT


def apply_brake_reaction(vehicle: VehicleState, brake_delta: float) -> None:
    """One-shot speed reduction on DIM receipt, floored at standstill."""
    vehicle.speed = max(0.0, vehicle.speed - brake_delta)


class World:
    """Mutable simulation state: the fleet plus per-lane follow chains."""

    def __init__(self, track: TrackSpec, config: SimConfig):
        self.track = track
        self.config = config
        self.tick = 0
        self.vehicles: list[VehicleState] = []
        self.lane_chains: list[list[int]] = [[] for _ in range(track.lane_count)]
        self.maneuver: LaneChangeManeuver | None = None
        self.completed_changes = 0
        self.blocked_changes = 0
        self._next_intent_left = True
        # per-segment constants: (s0, x0, y0, h0, cos_h0, sin_h0, curvature, r)
        self._seg_table = tuple(
            (track.seg_starts[i], sg.start_pose.x, sg.start_pose.y,
             sg.start_pose.heading, math.cos(sg.start_pose.heading),
             math.sin(sg.start_pose.heading), sg.curvature,
             (1.0 / sg.curvature if sg.curvature else 0.0))
            for i, sg in enumerate(track.segments))
        self._seg_ends = tuple(track.seg_starts[i] + sg.length
                               for i, sg in enumerate(track.segments))
        self._populate()

    # ------------------------------------------------------------------
    # setup

    def _populate(self) -> None:
        """Uniform spacing in s, lanes round-robin, speed classes alternating.

        Each vehicle gets a persistent per-vehicle speed factor on top of
        its class speed so that lanes drift relative to each other instead
        of freezing into a lockstep constellation.
        """
        cfg = self.config
        spacing = self.track.total_length / cfg.n_vehicles
        rng = random.Random(f"{cfg.placement_seed}:placement")
        lo, hi = cfg.speed_factor_range
        for i in range(cfg.n_vehicles):
            v_class, accel = cfg.speed_classes[i % len(cfg.speed_classes)]
            v_max = v_class * rng.uniform(lo, hi)
            lane = i % self.track.lane_count
            veh = VehicleState(
                id=i, s=i * spacing, lane=lane, speed=v_max, v_max=v_max,
                accel_cap=accel, decel_cap=cfg.decel_cap,
                length=cfg.vehicle_length, is_hv=(i == 0))
            pose = to_world(self.track, veh.pos)
            veh.x, veh.y, veh.heading = pose.x, pose.y, pose.heading
            veh.seg_idx = self._segment_index(veh.s)
            self.vehicles.append(veh)
            self.lane_chains[lane].append(i)
        for chain in self.lane_chains:
            chain.sort(key=lambda vid: self.vehicles[vid].s)
        self._check_integrity()

    def _segment_index(self, s: float) -> int:
        for i, end in enumerate(self._seg_ends):
            if s < end:
                return i
        return len(self._seg_ends) - 1

    # ------------------------------------------------------------------
    # queries

    @property
    def hv(self) -> VehicleState:
        return self.vehicles[0]

    @property
    def time(self) -> float:
        return self.tick * self.config.dt

    def leader_of(self, vid: int) -> VehicleState | None:
        for chain in self.lane_chains:
            if vid in chain:
                if len(chain) < 2:
                    return None
                j = chain.index(vid)
                return self.vehicles[chain[(j + 1) % len(chain)]]
        return None

    def bumper_gap(self, follower: VehicleState, leader: VehicleState) -> float:
        raw = (leader.s - follower.s) % self.track.total_length
        return raw - leader.length

    def world_pose(self, veh: VehicleState) -> WorldPose:
        return WorldPose(veh.x, veh.y, veh.heading)

    def nearest_in_lane(self, lane: int, s: float,
                        ahead: bool) -> VehicleState | None:
        """Nearest vehicle in a lane, ahead of or behind arc position s."""
        L = self.track.total_length
        best, best_gap = None, math.inf
        for vid in self.lane_chains[lane]:
            other = self.vehicles[vid]
            gap = (other.s - s) % L if ahead else (s - other.s) % L
            if gap < best_gap:
                best, best_gap = other, gap
        return best

    # ------------------------------------------------------------------
    # intents and maneuvers

    def schedule_intent(self) -> int | None:
        """At each intent-period boundary, turn the host's signal on.

        Direction alternates left/right where both neighbors exist and is
        forced outward/inward at the edge lanes.  Returns the direction when
        a new signal activation happened.
        """
        cfg = self.config
        if cfg.intent_period <= 0.0:
            return None
        period_ticks = round(cfg.intent_period / cfg.dt)
        if self.tick == 0 or self.tick % period_ticks != 0:
            return None
        hv = self.hv
        if self.maneuver is not None and self.maneuver.status == EXECUTING:
            return None
        if hv.turn_signal != SIGNAL_OFF:
            return None
        lane = hv.lane
        if lane == 0:
            direction = SIGNAL_RIGHT
        elif lane == self.track.lane_count - 1:
            direction = SIGNAL_LEFT
        else:
            direction = SIGNAL_LEFT if self._next_intent_left else SIGNAL_RIGHT
        self._next_intent_left = direction != SIGNAL_LEFT
        hv.turn_signal = direction
        return direction

    def apply_dim_brake(self, vehicle_id: int, brake_delta: float) -> None:
        """DIM reaction: cut the target's speed and hold it there while the
        host's maneuver plays out (config.brake_hold seconds)."""
        veh = self.vehicles[vehicle_id]
        apply_brake_reaction(veh, brake_delta)
        veh.brake_cap = veh.speed
        veh.brake_until = self.time + self.config.brake_hold

    def start_lane_change(self, direction: int) -> LaneChangeManeuver | None:
        """Begin the host's maneuver unless a target-lane vehicle overlaps
        the host's span right now; a blocked start drops the intent."""
        hv = self.hv
        L = self.track.total_length
        to_lane = hv.lane + (-1 if direction == SIGNAL_LEFT else 1)
        if not 0 <= to_lane < self.track.lane_count:
            hv.turn_signal = SIGNAL_OFF
            self.blocked_changes += 1
            return None
        for vid in self.lane_chains[to_lane]:
            other = self.vehicles[vid]
            fwd = (other.s - hv.s) % L
            if fwd < other.length or L - fwd < hv.length:
                hv.turn_signal = SIGNAL_OFF
                self.blocked_changes += 1
                return None
        self.maneuver = LaneChangeManeuver(
            vehicle_id=hv.id, from_lane=hv.lane, to_lane=to_lane,
            start_time=self.time, duration=self.config.lane_change_duration)
        return self.maneuver

    def _chain_insert(self, vid: int, lane: int) -> None:
        chain = self.lane_chains[lane]
        if not chain:
            chain.append(vid)
            return
        s = self.vehicles[vid].s
        L = self.track.total_length
        # insert before the nearest leader to keep the chain cyclically ordered
        best_j, best_gap = 0, math.inf
        for j, other in enumerate(chain):
            gap = (self.vehicles[other].s - s) % L
            if gap < best_gap:
                best_gap, best_j = gap, j
        chain.insert(best_j, vid)

    def _advance_maneuver(self) -> None:
        m = self.maneuver
        if m is None or m.status != EXECUTING:
            return
        hv = self.hv
        w = self.track.lane_width
        lat_sign = 1.0 if m.to_lane > m.from_lane else -1.0
        m.elapsed += self.config.dt
        if m.elapsed >= m.duration - 1e-9:
            self.lane_chains[m.from_lane].remove(hv.id)
            self._chain_insert(hv.id, m.to_lane)
            hv.lane = m.to_lane
            hv.lateral_offset = 0.0
            hv.lat_rate = 0.0
            hv.turn_signal = SIGNAL_OFF
            m.status = DONE
            self.completed_changes += 1
            return
        hv.lateral_offset = lat_sign * w * (m.elapsed / m.duration)
        hv.lat_rate = lat_sign * w / m.duration

    # ------------------------------------------------------------------
    # dynamics

    def step(self) -> None:
        """Advance one tick: Krauss speed bounds, positions, maneuver
        progress, headings/yaw rates, and the overlap integrity check."""
        cfg = self.config
        dt = cfg.dt
        L = self.track.total_length
        vehicles = self.vehicles
        tau = cfg.reaction_time
        min_gap = cfg.min_gap

        now = self.tick * dt
        new_speeds = [0.0] * len(vehicles)
        for chain in self.lane_chains:
            n = len(chain)
            for j, vid in enumerate(chain):
                veh = vehicles[vid]
                v = veh.speed
                v_des = veh.v_max
                v_acc = v + veh.accel_cap * dt
                if v_acc < v_des:
                    v_des = v_acc
                if now < veh.brake_until and veh.brake_cap < v_des:
                    v_des = veh.brake_cap
                if n > 1:
                    lead = vehicles[chain[(j + 1) % n]]
                    gap = (lead.s - veh.s) % L - lead.length - min_gap
                    if gap < 0.0:
                        gap = 0.0
                    vl = lead.speed
                    v_safe = vl + (gap - vl * tau) / (
                        (vl + v) / (2.0 * veh.decel_cap) + tau)
                    if v_safe < v_des:
                        v_des = v_safe
                new_speeds[vid] = v_des if v_des > 0.0 else 0.0

        # While the host drifts across it yields to the target-lane leader.
        # The target-lane follower does not car-follow the host until the
        # host is actually in its lane; it is only kept from physically
        # overlapping the host's span by maneuver completion.
        m = self.maneuver
        if m is not None and m.status == EXECUTING:
            hv = self.hv
            lead = self.nearest_in_lane(m.to_lane, hv.s, ahead=True)
            if lead is not None:
                gap = (lead.s - hv.s) % L - lead.length
                v_safe = krauss_safe_speed(lead.speed, hv.speed,
                                           max(0.0, gap - min_gap),
                                           hv.decel_cap, tau)
                new_speeds[hv.id] = max(0.0, min(new_speeds[hv.id], v_safe))
            follow = self.nearest_in_lane(m.to_lane, hv.s, ahead=False)
            if follow is not None:
                gap = (hv.s - follow.s) % L - hv.length
                t_rem = max(dt, m.duration - m.elapsed)
                cap = new_speeds[hv.id] + max(0.0, gap - min_gap) / t_rem
                if cap < new_speeds[follow.id]:
                    new_speeds[follow.id] = cap

        for veh in vehicles:
            v = new_speeds[veh.id]
            veh.accel = (v - veh.speed) / dt
            veh.speed = v
            veh.s = (veh.s + v * dt) % L

        self._advance_maneuver()

        seg_table = self._seg_table
        seg_ends = self._seg_ends
        n_segs = len(seg_table)
        lane_w = self.track.lane_width
        sin = math.sin
        cos = math.cos
        atan2 = math.atan2
        for veh in vehicles:
            s = veh.s
            i = veh.seg_idx
            if not (seg_table[i][0] <= s < seg_ends[i]):
                i = (i + 1) % n_segs
                while not (seg_table[i][0] <= s < seg_ends[i]):
                    i = (i + 1) % n_segs
                veh.seg_idx = i
            s0, x0, y0, h0, cos0, sin0, k, r = seg_table[i]
            u = s - s0
            d = veh.lane * lane_w + veh.lateral_offset
            if k == 0.0:
                h_path = h0
                veh.x = x0 + u * cos0 + d * sin0
                veh.y = y0 + u * sin0 - d * cos0
            else:
                h_path = h0 + k * u
                sh, ch = sin(h_path), cos(h_path)
                veh.x = x0 - r * sin0 + (r + d) * sh
                veh.y = y0 + r * cos0 - (r + d) * ch
            if veh.lat_rate != 0.0 and veh.speed > 1e-9:
                heading = (h_path - atan2(veh.lat_rate, veh.speed)) % TWO_PI
            else:
                heading = h_path % TWO_PI
            dh = heading - veh.heading
            if dh > math.pi:
                dh -= TWO_PI
            elif dh <= -math.pi:
                dh += TWO_PI
            veh.yaw_rate = dh / dt
            veh.heading = heading

        self.tick += 1
        self._check_integrity()

    def _check_integrity(self) -> None:
        L = self.track.total_length
        for chain in self.lane_chains:
            n = len(chain)
            if n < 2:
                continue
            for j, vid in enumerate(chain):
                veh = self.vehicles[vid]
                lead = self.vehicles[chain[(j + 1) % n]]
                gap = (lead.s - veh.s) % L - lead.length
                if gap < 0.0:
                    raise SimulationIntegrityError(
                        f"tick {self.tick}: vehicle {vid} overlaps leader "
                        f"{lead.id} by {-gap:.2f} m in lane {veh.lane}")
