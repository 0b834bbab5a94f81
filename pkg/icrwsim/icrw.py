"""Intersection collision risk warning: per-approach risk classification from CAM data."""

import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import TYPE_CHECKING, Iterable, List, Optional, Tuple

from .scenario import BrakeTimeMode

if TYPE_CHECKING:
    from .scenario import RoadNetwork

logger = logging.getLogger(__name__)

# Neighbor matching tolerances onto a conflicting approach
HEADING_ALIGNMENT = 0.9
LATERAL_TOLERANCE = 2.0


class RiskLevel(IntEnum):
    """Severity of an approach; ordered IDLE < WARNING < ALARM."""
    IDLE = 0
    WARNING = 1
    ALARM = 2


@dataclass(frozen=True)
class NeighborRecord:
    """Last known state of another vehicle, as received in its CAM."""
    vehicle_id: int
    x: float
    y: float
    speed: float
    heading: float
    timestamp: float

    def expired(self, now: float, ttl: float) -> bool:
        return now - self.timestamp > ttl

    def extrapolate(self, now: float) -> Tuple[float, float]:
        """Position dead-reckoned at constant speed and heading to `now`."""
        travelled = self.speed * max(0.0, now - self.timestamp)
        return (self.x + travelled * math.cos(self.heading), self.y + travelled * math.sin(self.heading))


@dataclass(frozen=True)
class RiskAssessment:
    """Outcome of one risk evaluation and the times that produced it."""
    level: RiskLevel
    tt_self: float
    tb_self: float
    tt_neighbor: Optional[float] = None
    neighbor_id: Optional[int] = None

    @classmethod
    def idle(cls) -> "RiskAssessment":
        return cls(level=RiskLevel.IDLE, tt_self=math.inf, tb_self=0.0)


@dataclass(frozen=True)
class NeighborMatch:
    """A neighbor mapped onto a conflicting approach of the same intersection.

    `distance` runs to the near edge of the conflict box and `clear_distance`
    to the point where the whole body has left it.
    """
    record: NeighborRecord
    edge: int
    distance: float
    clear_distance: float = 0.0


@dataclass(frozen=True)
class Kinematics:
    """Vehicle limits bounding how early an approach can reach and clear the box."""
    accel: float
    max_speed: float
    vehicle_length: float = 5.0


def time_to_intersection(d: float, v: float) -> float:
    """Time to reach the intersection at constant speed.

    Args:
        d: Distance to the intersection in meters
        v: Speed in m/s

    Returns:
        d / v, or infinity for a stationary vehicle

    Raises:
        ValueError: If d is negative
    """
    if d < 0:
        raise ValueError(f"Distance to intersection must be >= 0, got {d}")
    if v <= 0:
        return math.inf
    return d / v


def time_to_cover(distance: float, v: float, accel: float, v_max: float) -> float:
    """Shortest time to travel `distance` from speed `v` accelerating up to `v_max`."""
    if distance <= 0:
        return 0.0
    v = min(v, v_max)
    ramp = (v_max ** 2 - v ** 2) / (2.0 * accel)
    if distance <= ramp:
        return (-v + math.sqrt(v * v + 2.0 * accel * distance)) / accel
    return (v_max - v) / accel + (distance - ramp) / v_max


def occupancy_window(distance: float, clear_distance: float, v: float, kinematics: Kinematics,
                     v_max: float) -> Tuple[float, float]:
    """Earliest arrival at the box and the part of the crossing slower than free flow.

    A vehicle crossing at `v_max` collapses to the point (arrival, arrival);
    a slower crossing, e.g. from a standstill at the stop line, stretches the
    window by the extra time it spends inside the box.
    """
    arrival = time_to_cover(distance, v, kinematics.accel, v_max)
    cleared = time_to_cover(clear_distance, v, kinematics.accel, v_max)
    nominal = max(clear_distance - distance, 0.0) / v_max
    return arrival, max(arrival, cleared - nominal)


def aligned_neighbor_time(own: Tuple[float, float], other: Tuple[float, float]) -> float:
    """Neighbor time whose distance to own arrival equals the separation of the two windows."""
    if other[0] > own[1]:
        return own[0] + (other[0] - own[1])
    if other[1] < own[0]:
        return own[0] - (own[0] - other[1])
    return own[0]


def brake_time(v: float, a: float, mode: BrakeTimeMode = BrakeTimeMode.HALF) -> float:
    """Time to comfortably brake before the intersection.

    With the default v/(2a), TT > TB + RT is the same condition as
    d > v*RT + v^2/(2a). `BrakeTimeMode.FULL` uses the full stopping time v/a.

    Raises:
        ValueError: If a <= 0 or v < 0
    """
    if a <= 0:
        raise ValueError(f"Deceleration must be > 0, got {a}")
    if v < 0:
        raise ValueError(f"Speed must be >= 0, got {v}")
    return v / (2.0 * a) if mode is BrakeTimeMode.HALF else v / a


def classify_risk(tt_self: float, tt_neighbor: float, tb_self: float, reaction: float, alarm: float,
                  warning: float) -> RiskLevel:
    """Classify an approach.

    IDLE when the arrival times differ by more than the warning threshold,
    WARNING when they differ by more than the alarm threshold or when there is
    still time to brake comfortably, ALARM otherwise. An infinite time on either
    side means no meeting and yields IDLE.
    """
    if math.isinf(tt_self) or math.isinf(tt_neighbor):
        return RiskLevel.IDLE
    gap = abs(tt_self - tt_neighbor)
    if gap > warning:
        return RiskLevel.IDLE
    if gap > alarm:
        return RiskLevel.WARNING
    if tt_self - tb_self - reaction > 0:
        return RiskLevel.WARNING
    return RiskLevel.ALARM


def conflicting_neighbors(approach_edge: int, neighbors: Iterable[NeighborRecord], net: "RoadNetwork",
                          now: float, ttl: float, vehicle_length: float = 5.0) -> List[NeighborMatch]:
    """Neighbors on crossing roads of the same intersection, closest first.

    Each unexpired record is dead-reckoned to `now` and mapped onto a conflicting
    incoming edge of the same node when its heading is aligned with the edge and
    it lies on the lane and before the node center. Ties go to the lower id.
    """
    matches = []
    half_box = net.conflict_box / 2.0
    candidates = net.conflicting(approach_edge)
    for record in neighbors:
        if record.expired(now, ttl):
            continue
        px, py = record.extrapolate(now)
        hx_n, hy_n = math.cos(record.heading), math.sin(record.heading)
        for other in candidates:
            hx, hy = net.heading(other)
            if hx * hx_n + hy * hy_n <= HEADING_ALIGNMENT:
                continue
            sx, sy = net.node_position(net.edge(other).source)
            tx, ty = net.node_position(net.edge(other).target)
            span = math.hypot(tx - sx, ty - sy)
            along = (px - sx) * hx + (py - sy) * hy
            lateral = abs((px - sx) * hy - (py - sy) * hx)
            if lateral > LATERAL_TOLERANCE or along < -half_box or along > span:
                continue
            length = net.edge(other).length
            travelled = along * length / span
            matches.append(NeighborMatch(record=record, edge=other,
                                         distance=max(0.0, length - half_box - travelled),
                                         clear_distance=max(0.0, length + half_box + vehicle_length - travelled)))
            break
    matches.sort(key=lambda m: (m.distance, m.record.vehicle_id))
    return matches


def select_conflicting_neighbor(approach_edge: int, neighbors: Iterable[NeighborRecord], net: "RoadNetwork",
                                now: float, ttl: float) -> Optional[NeighborMatch]:
    """The conflicting neighbor closest to the intersection, if any."""
    matches = conflicting_neighbors(approach_edge, neighbors, net, now, ttl)
    return matches[0] if matches else None


class RiskEstimator:
    """Runs the warning application for one vehicle approach.

    Without `kinematics` arrival times are extrapolated at constant speed.
    With it, both sides use the earliest possible arrival and a slow crossing
    widens into an occupancy window (see `occupancy_window`).
    """

    def __init__(self, net: "RoadNetwork", alarm: float, warning: float, deceleration: float,
                 reaction_time: float, ttl: float = 1.1, mode: BrakeTimeMode = BrakeTimeMode.HALF,
                 kinematics: Optional[Kinematics] = None):
        self.net = net
        self.alarm = alarm
        self.warning = warning
        self.deceleration = deceleration
        self.reaction_time = reaction_time
        self.ttl = ttl
        self.mode = mode
        self.kinematics = kinematics

    def _v_max(self, edge: int) -> float:
        return min(self.kinematics.max_speed, self.net.edge(edge).speed_limit)

    def assess(self, approach_edge: int, distance: float, speed: float, neighbors: Iterable[NeighborRecord],
               now: float) -> RiskAssessment:
        """Risk of the current approach against its most dangerous neighbor.

        Every conflicting neighbor is classified; the highest level wins, then
        the smaller time gap, then the neighbor closer to the box. Approaches
        with right of way and vehicles already past the stop line report IDLE.
        """
        if distance <= 0 or not self.net.lacks_right_of_way(approach_edge):
            return RiskAssessment.idle()

        kin = self.kinematics
        tb_self = brake_time(speed, self.deceleration, self.mode)
        if kin is None:
            own = (time_to_intersection(distance, speed),) * 2
        else:
            own = occupancy_window(distance, distance + self.net.conflict_box + kin.vehicle_length, speed, kin,
                                   self._v_max(approach_edge))
        tt_self = own[0]
        length = kin.vehicle_length if kin is not None else 5.0
        matches = conflicting_neighbors(approach_edge, neighbors, self.net, now, self.ttl, length)
        if not matches:
            return RiskAssessment(level=RiskLevel.IDLE, tt_self=tt_self, tb_self=tb_self)

        best: Optional[Tuple[Tuple[int, float, float, int], RiskAssessment]] = None
        for match in matches:
            if kin is None:
                tt_neighbor = time_to_intersection(match.distance, match.record.speed)
            else:
                window = occupancy_window(match.distance, match.clear_distance, match.record.speed, kin,
                                          self._v_max(match.edge))
                tt_neighbor = aligned_neighbor_time(own, window)
            level = classify_risk(tt_self, tt_neighbor, tb_self, self.reaction_time, self.alarm, self.warning)
            gap = abs(tt_self - tt_neighbor) if not math.isinf(tt_neighbor) else math.inf
            rank = (-int(level), gap, match.distance, match.record.vehicle_id)
            if best is None or rank < best[0]:
                best = (rank, RiskAssessment(level=level, tt_self=tt_self, tb_self=tb_self,
                                             tt_neighbor=tt_neighbor, neighbor_id=match.record.vehicle_id))
        return best[1]
