"""Vehicle kinematics, driver behavior at intersections, collisions and respawn."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .icrw import RiskAssessment, RiskLevel, time_to_cover
from .rng import RandomStreams
from .scenario import RoadNetwork, Route, ScenarioConfig, continue_route, generate_routes, random_route

logger = logging.getLogger(__name__)

# Speeds below this count as standing still
STOPPED_SPEED = 0.1
# Extra distance kept before the commitment point
COMMIT_MARGIN = 1.0


class Attention(Enum):
    CAREFUL = "careful"
    DISTRACTED = "distracted"


class Decision(Enum):
    PROCEED = "proceed"
    YIELD = "yield"


@dataclass(frozen=True)
class DriverParams:
    """Kinematic and behavioral constants shared by all drivers of a run."""
    dt: float = 0.1
    max_speed: float = 13.89
    accel: float = 2.5
    comfort_brake: float = 4.0
    emergency_brake: float = 8.0
    lookahead: float = 30.0
    yield_gap: float = 1.0
    vehicle_length: float = 5.0
    standstill_gap: float = 2.0
    min_trip_length: float = 1000.0
    deadlock_timeout: float = 5.0
    warning_compliance: float = 0.5

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "DriverParams":
        m = config.mobility
        return cls(dt=config.time_step, max_speed=config.max_speed, accel=m.accel,
                   comfort_brake=config.deceleration, emergency_brake=m.emergency_brake, lookahead=m.lookahead,
                   yield_gap=m.yield_gap, vehicle_length=m.vehicle_length, standstill_gap=m.standstill_gap,
                   min_trip_length=m.min_trip_length, deadlock_timeout=m.deadlock_timeout,
                   warning_compliance=config.icrw.warning_compliance)


@dataclass(slots=True)
class VehicleState:
    """Kinematics, route progress and driver state of one vehicle.

    `s` is the front bumper position along `edge`. `claim` is the node whose
    intersection the vehicle has committed to cross, entered from `claim_edge`.
    """
    id: int
    edge: int
    s: float
    v: float
    route: Route
    cursor: int = 0
    next_route: Optional[Route] = None
    prev_edge: Optional[int] = None
    attention: Attention = Attention.DISTRACTED
    icrw_forced_careful: bool = False
    warning_drawn: bool = False
    risk: RiskLevel = RiskLevel.IDLE
    odometer: float = 0.0
    clock: float = 0.0
    trip_start: float = 0.0
    claim: Optional[int] = None
    claim_edge: Optional[int] = None
    wait_time: float = 0.0

    @property
    def is_careful(self) -> bool:
        return self.attention is Attention.CAREFUL or self.icrw_forced_careful

    @property
    def next_edge(self) -> int:
        if self.cursor + 1 < len(self.route):
            return self.route[self.cursor + 1]
        return self.next_route[0]


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    node: int
    vehicles: Tuple[int, int]


@dataclass(frozen=True)
class TripSample:
    """One trip: a completed route, a route cut short by a collision, or one still running."""
    vehicle_id: int
    start: float
    distance: float
    duration: float
    truncated: bool = False


def stop_distance(vehicle: VehicleState, net: RoadNetwork) -> float:
    """Distance from the front bumper to the stop line of the next intersection."""
    return net.edge(vehicle.edge).length - net.conflict_box / 2.0 - vehicle.s


def occupied_boxes(vehicle: VehicleState, net: RoadNetwork, vehicle_length: float) -> List[Tuple[int, int]]:
    """Boxes overlapped by a vehicle body, as (node, approach edge) pairs."""
    half = net.conflict_box / 2.0
    edge = net.edge(vehicle.edge)
    boxes = []
    if vehicle.s > edge.length - half:
        boxes.append((edge.target, vehicle.edge))
    if vehicle.prev_edge is not None and vehicle.s - vehicle_length < half:
        boxes.append((edge.source, vehicle.prev_edge))
    return boxes


def car_follow_accel(v: float, leader_gap: Optional[float], leader_v: float, v_max: float,
                     params: DriverParams = DriverParams()) -> float:
    """Safe-gap car-following acceleration.

    The follower never exceeds the speed from which it can stop behind a
    leader braking comfortably, keeping the standstill distance, one step later.

    Args:
        v: Follower speed in m/s
        leader_gap: Bumper-to-bumper gap in meters, None without a leader
        leader_v: Leader speed in m/s
        v_max: Desired speed in m/s
        params: Driver parameters

    Returns:
        Acceleration in [-emergency_brake, accel]
    """
    dt = params.dt
    desired = min(params.accel, (v_max - v) / dt)
    if leader_gap is None:
        return max(desired, -params.emergency_brake)
    if leader_gap <= 0:
        return -params.emergency_brake

    b = params.comfort_brake
    room = leader_gap - params.standstill_gap + leader_v ** 2 / (2.0 * b)
    v_safe = 0.0 if room <= 0 else b * (-dt + math.sqrt(dt * dt + 2.0 * room / b))
    return float(np.clip(min(desired, (v_safe - v) / dt), -params.emergency_brake, params.accel))


class IntersectionView:
    """Snapshot of claims, occupants and lanes used by careful drivers in one step."""

    def __init__(self, vehicles: Iterable[VehicleState], net: RoadNetwork, params: DriverParams):
        self.net = net
        self.params = params
        self.by_edge: Dict[int, List[VehicleState]] = {}
        self.claims: Dict[int, Dict[int, int]] = {}
        self.occupants: Dict[int, Dict[int, int]] = {}
        for vehicle in vehicles:
            self.by_edge.setdefault(vehicle.edge, []).append(vehicle)
            if vehicle.claim is not None:
                self.claims.setdefault(vehicle.claim, {})[vehicle.id] = vehicle.claim_edge
            for node, approach in occupied_boxes(vehicle, net, params.vehicle_length):
                self.occupants.setdefault(node, {})[vehicle.id] = approach
        for lane in self.by_edge.values():
            lane.sort(key=lambda x: (x.s, x.id))

    def add_claim(self, vehicle: VehicleState) -> None:
        self.claims.setdefault(vehicle.claim, {})[vehicle.id] = vehicle.claim_edge

    def drop_claim(self, vehicle: VehicleState) -> None:
        self.claims.get(vehicle.claim, {}).pop(vehicle.id, None)

    def _conflicts(self, table: Dict[int, Dict[int, int]], node: int, edge: int, vehicle_id: int) -> bool:
        return any(other != vehicle_id and self.net.conflicts(edge, approach)
                   for other, approach in table.get(node, {}).items())

    def conflicting_claim(self, node: int, edge: int, vehicle_id: int) -> bool:
        return self._conflicts(self.claims, node, edge, vehicle_id)

    def conflicting_occupant(self, node: int, edge: int, vehicle_id: int) -> bool:
        return self._conflicts(self.occupants, node, edge, vehicle_id)

    def approaching(self, edge: int) -> List[VehicleState]:
        """Vehicles on incoming edges that cross `edge` at its target node."""
        return [v for other in self.net.conflicting(edge) for v in self.by_edge.get(other, [])]

    def exit_has_room(self, vehicle: VehicleState) -> bool:
        """Whether the exit edge can take the whole vehicle body clear of the box."""
        lane = self.by_edge.get(vehicle.next_edge)
        if not lane:
            return True
        p = self.params
        needed = self.net.conflict_box / 2.0 + 2.0 * p.vehicle_length + p.standstill_gap
        return lane[0].s >= needed

    def leader(self, vehicle: VehicleState) -> Optional[Tuple[float, float]]:
        """(gap, speed) of the vehicle ahead on the same lane or on the next edge."""
        lane = self.by_edge.get(vehicle.edge, [])
        length = self.params.vehicle_length
        index = lane.index(vehicle)
        if index + 1 < len(lane):
            ahead = lane[index + 1]
            return (ahead.s - length - vehicle.s, ahead.v)
        following = self.by_edge.get(vehicle.next_edge)
        if following:
            ahead = following[0]
            remaining = self.net.edge(vehicle.edge).length - vehicle.s
            return (remaining + ahead.s - length, ahead.v)
        return None


def yield_decision(vehicle: VehicleState, net: RoadNetwork, approaching: Sequence[VehicleState],
                   params: DriverParams = DriverParams(), view: Optional[IntersectionView] = None,
                   exempt: bool = False) -> Decision:
    """Decide whether a vehicle may enter its next intersection.

    Distracted drivers (not forced careful by the warning application) always
    proceed. Careful drivers within the lookahead yield to conflicting claims and
    occupants, to a full exit lane, and to any conflicting vehicle with right of
    way that could reach the box before they have cleared it plus the yield gap.
    For the vehicle chosen to break a deadlock (`exempt`) the last rule only
    counts priority vehicles that are still moving.
    """
    if not vehicle.is_careful:
        return Decision.PROCEED
    node = net.edge(vehicle.edge).target
    if vehicle.claim == node:
        return Decision.PROCEED
    d = stop_distance(vehicle, net)
    if d > params.lookahead or d < -1e-6:
        return Decision.PROCEED

    if view is not None:
        if view.conflicting_claim(node, vehicle.edge, vehicle.id):
            return Decision.YIELD
        if view.conflicting_occupant(node, vehicle.edge, vehicle.id):
            return Decision.YIELD
        if not view.exit_has_room(vehicle):
            return Decision.YIELD

    v_max = min(params.max_speed, net.edge(vehicle.edge).speed_limit)
    clear = time_to_cover(max(d, 0.0) + net.conflict_box + params.vehicle_length, vehicle.v, params.accel, v_max)
    priority = set(net.yields_to(vehicle.edge))
    for other in approaching:
        if other.edge not in priority or (exempt and other.v < STOPPED_SPEED):
            continue
        other_max = min(params.max_speed, net.edge(other.edge).speed_limit)
        arrival = time_to_cover(max(stop_distance(other, net), 0.0), other.v, params.accel, other_max)
        if arrival < clear + params.yield_gap:
            return Decision.YIELD
    return Decision.PROCEED


def apply_driver_reaction(vehicle: VehicleState, risk: RiskAssessment, rng: np.random.Generator,
                          compliance: float = 0.5) -> VehicleState:
    """Apply a risk assessment to the driver.

    ALARM forces the driver careful. The first WARNING of an approach forces it
    with probability `compliance`; later warnings of the same approach draw
    nothing. IDLE changes nothing.
    """
    if risk.level is RiskLevel.ALARM:
        vehicle.icrw_forced_careful = True
    elif risk.level is RiskLevel.WARNING and not vehicle.warning_drawn:
        vehicle.warning_drawn = True
        if rng.random() < compliance:
            vehicle.icrw_forced_careful = True
    return vehicle


def detect_collisions(states: Iterable[VehicleState], net: RoadNetwork, now: float,
                      vehicle_length: float = 5.0, reported: Optional[Set[Tuple[int, int, int]]] = None
                      ) -> List[CollisionEvent]:
    """Find pairs of vehicles inside the same box that arrived from crossing edges.

    `reported` holds (node, id, id) triples already reported during the current
    traversal; it is updated in place and pruned of pairs no longer together.
    """
    occupants: Dict[int, List[Tuple[int, int]]] = {}
    for vehicle in states:
        for node, approach in occupied_boxes(vehicle, net, vehicle_length):
            occupants.setdefault(node, []).append((vehicle.id, approach))

    events = []
    together: Set[Tuple[int, int, int]] = set()
    for node in sorted(occupants):
        inside = sorted(occupants[node])
        for i, (a, edge_a) in enumerate(inside):
            for b, edge_b in inside[i + 1:]:
                if not net.conflicts(edge_a, edge_b):
                    continue
                key = (node, a, b)
                together.add(key)
                if reported is not None and key in reported:
                    continue
                events.append(CollisionEvent(time=now, node=node, vehicles=(a, b)))
    if reported is not None:
        reported.clear()
        reported.update(together)
    return events


def _lane_is_free(net: RoadNetwork, occupied: Dict[int, List[float]], edge: int, s: float,
                  params: DriverParams) -> bool:
    clearance = params.vehicle_length + params.standstill_gap + 1.0
    return all(abs(s - other) >= clearance for other in occupied.get(edge, []))


def free_spot(net: RoadNetwork, params: DriverParams, occupied: Dict[int, List[float]], rng: np.random.Generator,
              uniform_position: bool) -> Tuple[int, float]:
    """Random (edge, s) with room for a standing vehicle.

    Raises:
        ValueError: If no free spot is found
    """
    low = net.conflict_box / 2.0 + params.vehicle_length
    for _ in range(1000):
        edge = int(rng.integers(len(net.edges)))
        high = net.edge(edge).length - net.conflict_box / 2.0 - 1.0
        s = float(rng.uniform(low, high)) if uniform_position else low
        if _lane_is_free(net, occupied, edge, s, params):
            occupied.setdefault(edge, []).append(s)
            return edge, s
    raise ValueError("No free spot left on the network; reduce vehicle_count")


def place_vehicle(vehicle_id: int, net: RoadNetwork, streams: RandomStreams, params: DriverParams,
                  occupied: Dict[int, List[float]], rng: np.random.Generator, now: float,
                  attention: Attention, uniform_position: bool) -> VehicleState:
    """Create a vehicle on a free spot of a random edge, standing still.

    Raises:
        ValueError: If no free spot is found
    """
    edge, s = free_spot(net, params, occupied, rng, uniform_position)
    route = random_route(net, edge, streams.get("routes", vehicle_id), params.min_trip_length)
    return _standing_vehicle(vehicle_id, edge, s, route, net, streams, params, now, attention)


def _standing_vehicle(vehicle_id: int, edge: int, s: float, route: Route, net: RoadNetwork,
                      streams: RandomStreams, params: DriverParams, now: float, attention: Attention) -> VehicleState:
    vehicle = VehicleState(id=vehicle_id, edge=edge, s=s, v=0.0, route=route, attention=attention,
                           trip_start=now)
    if len(route) == 1:
        vehicle.next_route = continue_route(net, edge, streams.get("routes", vehicle_id), params.min_trip_length)
    return vehicle


def respawn(ids: Iterable[int], states: Dict[int, VehicleState], net: RoadNetwork, streams: RandomStreams,
            now: float, params: DriverParams, next_id: int) -> Tuple[List[TripSample], List[int]]:
    """Replace crashed vehicles by fresh standing vehicles at random edge origins.

    The crashed vehicles close their current trip as truncated. Replacements
    get new ids starting at `next_id`, so the fleet size stays constant.

    Returns:
        (closed trips, ids of the replacement vehicles)
    """
    trips = []
    removed = []
    for vid in sorted(set(ids)):
        vehicle = states.pop(vid, None)
        if vehicle is None:
            continue
        removed.append(vehicle)
        trips.append(TripSample(vid, vehicle.trip_start, vehicle.odometer, vehicle.clock, truncated=True))

    occupied: Dict[int, List[float]] = {}
    for vehicle in states.values():
        occupied.setdefault(vehicle.edge, []).append(vehicle.s)

    rng = streams.get("respawn")
    new_ids = []
    for old in removed:
        vehicle = place_vehicle(next_id, net, streams, params, occupied, rng, now, old.attention,
                                uniform_position=False)
        states[vehicle.id] = vehicle
        new_ids.append(vehicle.id)
        logger.debug(f"Vehicle {old.id} respawned as {vehicle.id} on edge {vehicle.edge}")
        next_id += 1
    return trips, new_ids


class Traffic:
    """All vehicles of one run and the per-step mobility phases."""

    def __init__(self, net: RoadNetwork, params: DriverParams, streams: RandomStreams, attention: Attention):
        self.net = net
        self.params = params
        self.streams = streams
        self.attention = attention
        self.vehicles: Dict[int, VehicleState] = {}
        self.next_id = 0
        self.reported: Set[Tuple[int, int, int]] = set()
        self.decisions: Dict[int, Decision] = {}
        self._view: Optional[IntersectionView] = None

    def populate(self, count: int) -> None:
        """Place `count` vehicles on free spots with their first routes."""
        rng = self.streams.get("placement")
        occupied: Dict[int, List[float]] = {}
        spots = [free_spot(self.net, self.params, occupied, rng, uniform_position=True) for _ in range(count)]
        routes = generate_routes(self.net, count, self.streams.get("routes"), self.params.min_trip_length,
                                 starts=[edge for edge, _ in spots])
        for (edge, s), route in zip(spots, routes):
            vehicle = _standing_vehicle(self.next_id, edge, s, route, self.net, self.streams, self.params, 0.0,
                                        self.attention)
            self.vehicles[vehicle.id] = vehicle
            self.next_id += 1

    def ordered(self) -> List[VehicleState]:
        return [self.vehicles[k] for k in sorted(self.vehicles)]

    def plan(self) -> Dict[int, Decision]:
        """Yield decisions and claims, processed in id order."""
        net, p = self.net, self.params
        view = IntersectionView(self.vehicles.values(), net, p)
        exempt = self._deadlock_breakers()
        decisions = {}
        for vehicle in self.ordered():
            node = net.edge(vehicle.edge).target
            if vehicle.claim == node and self._can_abort(vehicle):
                view.drop_claim(vehicle)
                vehicle.claim = None
                vehicle.claim_edge = None
            decision = yield_decision(vehicle, net, view.approaching(vehicle.edge), p, view,
                                      exempt=vehicle.id in exempt)
            decisions[vehicle.id] = decision
            if decision is Decision.PROCEED and vehicle.claim is None:
                d = stop_distance(vehicle, net)
                commit = vehicle.v ** 2 / (2.0 * p.comfort_brake) + vehicle.v * p.dt + COMMIT_MARGIN
                if d <= commit:
                    vehicle.claim = node
                    vehicle.claim_edge = vehicle.edge
                    view.add_claim(vehicle)
        self.decisions = decisions
        self._view = view
        return decisions

    def _can_abort(self, vehicle: VehicleState) -> bool:
        """Whether a driver forced careful after claiming can still stop before the box."""
        if not vehicle.icrw_forced_careful:
            return False
        p = self.params
        d = stop_distance(vehicle, self.net)
        return d >= vehicle.v ** 2 / (2.0 * p.emergency_brake) + 2.0 * vehicle.v * p.dt + COMMIT_MARGIN

    def _deadlock_breakers(self) -> Set[int]:
        waiting: Dict[int, int] = {}
        for vehicle in self.ordered():
            if vehicle.wait_time >= self.params.deadlock_timeout and vehicle.claim is None:
                node = self.net.edge(vehicle.edge).target
                waiting.setdefault(node, vehicle.id)
        return set(waiting.values())

    def advance(self, now: float) -> List[TripSample]:
        """Move every vehicle one step from the same snapshot.

        Returns:
            Trips completed during the step
        """
        net, p = self.net, self.params
        view = self._view
        targets: Dict[int, float] = {}
        for vehicle in self.ordered():
            v_max = min(p.max_speed, net.edge(vehicle.edge).speed_limit)
            lead = view.leader(vehicle)
            a = car_follow_accel(vehicle.v, lead[0] if lead else None, lead[1] if lead else 0.0, v_max, p)
            if self.decisions.get(vehicle.id) is Decision.YIELD:
                d = stop_distance(vehicle, net)
                a = min(a, car_follow_accel(vehicle.v, d + p.standstill_gap, 0.0, v_max, p))
            targets[vehicle.id] = min(max(vehicle.v + a * p.dt, 0.0), v_max)

        completed = []
        for vehicle in self.ordered():
            v_new = targets[vehicle.id]
            yielding = self.decisions.get(vehicle.id) is Decision.YIELD
            vehicle.wait_time = vehicle.wait_time + p.dt if yielding and v_new < STOPPED_SPEED else 0.0
            step = v_new * p.dt
            vehicle.v = v_new
            vehicle.s += step
            vehicle.odometer += step
            vehicle.clock += p.dt
            length = net.edge(vehicle.edge).length
            if vehicle.s > length:
                trip = self._hand_off(vehicle, vehicle.s - length, now)
                if trip is not None:
                    completed.append(trip)
            self._release_claim(vehicle)
        return completed

    def _hand_off(self, vehicle: VehicleState, overshoot: float, now: float) -> Optional[TripSample]:
        net, p = self.net, self.params
        trip = None
        vehicle.prev_edge = vehicle.edge
        if vehicle.cursor + 1 < len(vehicle.route):
            vehicle.cursor += 1
        else:
            trip = TripSample(vehicle.id, vehicle.trip_start, vehicle.odometer, vehicle.clock)
            vehicle.route, vehicle.next_route, vehicle.cursor = vehicle.next_route, None, 0
            vehicle.odometer, vehicle.clock, vehicle.trip_start = 0.0, 0.0, now + p.dt
        vehicle.edge = vehicle.route[vehicle.cursor]
        vehicle.s = min(overshoot, net.edge(vehicle.edge).length)
        if vehicle.cursor == len(vehicle.route) - 1 and vehicle.next_route is None:
            vehicle.next_route = continue_route(net, vehicle.edge, self.streams.get("routes", vehicle.id),
                                                p.min_trip_length)
        if vehicle.claim is not None:
            vehicle.claim_edge = vehicle.prev_edge
        vehicle.icrw_forced_careful = False
        vehicle.warning_drawn = False
        vehicle.risk = RiskLevel.IDLE
        vehicle.wait_time = 0.0
        return trip

    def _release_claim(self, vehicle: VehicleState) -> None:
        if vehicle.claim is None:
            return
        edge = self.net.edge(vehicle.edge)
        if edge.source == vehicle.claim and vehicle.s - self.params.vehicle_length >= self.net.conflict_box / 2.0:
            vehicle.claim = None
            vehicle.claim_edge = None

    def collisions(self, now: float) -> List[CollisionEvent]:
        return detect_collisions(self.ordered(), self.net, now, self.params.vehicle_length, self.reported)

    def respawn(self, ids: Iterable[int], now: float) -> Tuple[List[TripSample], List[int]]:
        trips, new_ids = respawn(ids, self.vehicles, self.net, self.streams, now, self.params, self.next_id)
        self.next_id += len(new_ids)
        return trips, new_ids

    def in_progress(self) -> List[TripSample]:
        return [TripSample(v.id, v.trip_start, v.odometer, v.clock) for v in self.ordered()
                if v.clock > 0]
