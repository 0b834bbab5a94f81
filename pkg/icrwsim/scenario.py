"""Road network, intersection priorities, routes and experiment configuration."""

import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from .channel.models import ChannelModel, Ideal, channel_from_flat, channel_to_flat
from .validator import ValidationError

logger = logging.getLogger(__name__)

Route = Tuple[int, ...]

DEFAULT_SPEED_LIMIT = 13.89


@dataclass(frozen=True)
class Node:
    """Intersection at a fixed position in meters."""
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Edge:
    """Directed single-lane road segment."""
    id: int
    source: int
    target: int
    length: float
    speed_limit: float = DEFAULT_SPEED_LIMIT
    major: bool = False


def _cross(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    return a[0] * b[1] - a[1] * b[0]


@dataclass(frozen=True)
class RoadNetwork:
    """Immutable road graph with unsignalized priority intersections.

    Right of way between two incoming edges of the same node: a major edge beats
    a minor one; within the same class the approach coming from the right wins;
    aligned or opposite approaches (which never conflict) fall back to the edge id
    so that priority stays total.
    """
    nodes: Tuple[Node, ...]
    edges: Tuple[Edge, ...]
    conflict_box: float = 8.0

    def __post_init__(self):
        if not self.edges:
            raise ValueError("Network has no edges")
        ids = [node.id for node in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("Duplicate node ids")
        known = set(ids)
        for index, edge in enumerate(self.edges):
            if edge.id != index:
                raise ValueError(f"Edge at position {index} has id {edge.id}; edge ids must be 0..n-1")
            if edge.source not in known or edge.target not in known:
                raise ValueError(f"Edge {edge.id} references an unknown node")
            if edge.source == edge.target:
                raise ValueError(f"Edge {edge.id} is a self loop")
            if edge.length <= 0:
                raise ValueError(f"Edge {edge.id} has non-positive length {edge.length}")
            if edge.speed_limit <= 0:
                raise ValueError(f"Edge {edge.id} has non-positive speed limit {edge.speed_limit}")
        shortest = min(edge.length for edge in self.edges)
        if not 0 < self.conflict_box < shortest:
            raise ValueError(f"Conflict box side must be in (0, {shortest}), got {self.conflict_box}")
        if not self._strongly_connected():
            raise ValueError("Network is not strongly connected")

    def _strongly_connected(self) -> bool:
        start = self.nodes[0].id

        def reach(neighbours: Dict[int, List[int]]) -> int:
            seen = {start}
            queue = deque([start])
            while queue:
                for nxt in neighbours.get(queue.popleft(), []):
                    if nxt not in seen:
                        seen.add(nxt)
                        queue.append(nxt)
            return len(seen)

        forward: Dict[int, List[int]] = {}
        backward: Dict[int, List[int]] = {}
        for edge in self.edges:
            forward.setdefault(edge.source, []).append(edge.target)
            backward.setdefault(edge.target, []).append(edge.source)
        return reach(forward) == len(self.nodes) and reach(backward) == len(self.nodes)

    @cached_property
    def _node_map(self) -> Dict[int, Node]:
        return {node.id: node for node in self.nodes}

    @cached_property
    def out_edges(self) -> Dict[int, Tuple[int, ...]]:
        result: Dict[int, List[int]] = {node.id: [] for node in self.nodes}
        for edge in self.edges:
            result[edge.source].append(edge.id)
        return {k: tuple(v) for k, v in result.items()}

    @cached_property
    def in_edges(self) -> Dict[int, Tuple[int, ...]]:
        result: Dict[int, List[int]] = {node.id: [] for node in self.nodes}
        for edge in self.edges:
            result[edge.target].append(edge.id)
        return {k: tuple(v) for k, v in result.items()}

    @cached_property
    def _reverse(self) -> Dict[int, Optional[int]]:
        by_ends = {(edge.source, edge.target): edge.id for edge in self.edges}
        return {edge.id: by_ends.get((edge.target, edge.source)) for edge in self.edges}

    @cached_property
    def _headings(self) -> Dict[int, Tuple[float, float]]:
        headings = {}
        for edge in self.edges:
            a, b = self._node_map[edge.source], self._node_map[edge.target]
            dx, dy = b.x - a.x, b.y - a.y
            norm = math.hypot(dx, dy)
            headings[edge.id] = (dx / norm, dy / norm) if norm > 0 else (1.0, 0.0)
        return headings

    @cached_property
    def _lacks_row(self) -> Dict[int, bool]:
        return {edge.id: bool(self.yields_to(edge.id)) for edge in self.edges}

    def edge(self, edge_id: int) -> Edge:
        return self.edges[edge_id]

    def node_position(self, node_id: int) -> Tuple[float, float]:
        node = self._node_map[node_id]
        return (node.x, node.y)

    def edge_endpoints(self, edge_id: int) -> Tuple[int, int]:
        edge = self.edges[edge_id]
        return (edge.source, edge.target)

    def heading(self, edge_id: int) -> Tuple[float, float]:
        """Unit direction of travel along an edge."""
        return self._headings[edge_id]

    def heading_angle(self, edge_id: int) -> float:
        hx, hy = self._headings[edge_id]
        return math.atan2(hy, hx)

    def position(self, edge_id: int, s: float) -> Tuple[float, float]:
        """World position of a point `s` meters along an edge."""
        edge = self.edges[edge_id]
        a, b = self._node_map[edge.source], self._node_map[edge.target]
        f = s / edge.length
        return (a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f)

    def reverse(self, edge_id: int) -> Optional[int]:
        return self._reverse[edge_id]

    def successors(self, edge_id: int) -> Tuple[int, ...]:
        """Edges a vehicle may take after `edge_id`; U-turns only at dead ends."""
        options = self.out_edges[self.edges[edge_id].target]
        back = self._reverse[edge_id]
        forward = tuple(e for e in options if e != back)
        return forward or options

    def street_axis(self, edge_id: int) -> Hashable:
        """Identifier of the straight street an edge lies on."""
        hx, hy = self._headings[edge_id]
        a = self._node_map[self.edges[edge_id].source]
        if abs(hy) < 1e-9:
            return ("h", round(a.y, 6))
        if abs(hx) < 1e-9:
            return ("v", round(a.x, 6))
        back = self._reverse[edge_id]
        return ("d", edge_id if back is None else min(edge_id, back))

    def in_box(self, node_id: int, point: Tuple[float, float]) -> bool:
        """Whether a point lies inside the conflict box of a node."""
        node = self._node_map[node_id]
        half = self.conflict_box / 2.0
        return abs(point[0] - node.x) <= half and abs(point[1] - node.y) <= half

    def conflicts(self, a: int, b: int) -> bool:
        """Whether two incoming edges of the same node cross each other."""
        if a == b or self.edges[a].target != self.edges[b].target:
            return False
        return abs(_cross(self._headings[a], self._headings[b])) > 0.5

    def has_priority(self, a: int, b: int) -> bool:
        """Whether incoming edge `a` has right of way over incoming edge `b`."""
        ea, eb = self.edges[a], self.edges[b]
        if ea.major != eb.major:
            return ea.major
        c = _cross(self._headings[b], self._headings[a])
        if abs(c) > 1e-9:
            return c > 0
        return a < b

    def yields_to(self, edge_id: int) -> Tuple[int, ...]:
        """Conflicting incoming edges that have right of way over `edge_id`."""
        node = self.edges[edge_id].target
        return tuple(o for o in self.in_edges[node] if self.conflicts(edge_id, o) and self.has_priority(o, edge_id))

    def conflicting(self, edge_id: int) -> Tuple[int, ...]:
        node = self.edges[edge_id].target
        return tuple(o for o in self.in_edges[node] if self.conflicts(edge_id, o))

    def lacks_right_of_way(self, edge_id: int) -> bool:
        """Whether an approach must give way to at least one conflicting approach."""
        return self._lacks_row[edge_id]

    def route_length(self, route: Sequence[int]) -> float:
        return sum(self.edges[e].length for e in route)

    @classmethod
    def from_lists(cls, nodes: List[Dict[str, Any]], edges: List[Dict[str, Any]],
                   conflict_box: float = 8.0, speed_limit: float = DEFAULT_SPEED_LIMIT) -> "RoadNetwork":
        """Build a network from explicit node and edge records.

        Node records carry `id`, `x`, `y`; edge records carry `from`, `to` and
        optionally `length` (defaults to the straight-line distance),
        `speed_limit` and `major`.
        """
        node_objs = tuple(Node(int(n["id"]), float(n["x"]), float(n["y"])) for n in nodes)
        positions = {n.id: (n.x, n.y) for n in node_objs}
        edge_objs = []
        for index, record in enumerate(edges):
            source, target = int(record["from"]), int(record["to"])
            if source not in positions or target not in positions:
                raise ValueError(f"Edge {index} references an unknown node")
            length = record.get("length")
            if length is None:
                length = math.dist(positions[source], positions[target])
            edge_objs.append(Edge(index, source, target, float(length),
                                  float(record.get("speed_limit", speed_limit)), bool(record.get("major", False))))
        return cls(nodes=node_objs, edges=tuple(edge_objs), conflict_box=conflict_box)


def build_grid(blocks_x: int, blocks_y: int, block_len: float, major_period: int,
               conflict_box: float = 8.0, speed_limit: float = DEFAULT_SPEED_LIMIT) -> RoadNetwork:
    """Build a Manhattan grid of bidirectional single-lane streets.

    Node (i, j) sits at (i * block_len, j * block_len) and has id
    j * (blocks_x + 1) + i. Streets whose index is a multiple of `major_period`
    are major.

    Args:
        blocks_x: Number of blocks along x
        blocks_y: Number of blocks along y
        block_len: Block length in meters
        major_period: Every n-th street is major
        conflict_box: Side of the square conflict box in meters
        speed_limit: Speed limit of every edge in m/s

    Returns:
        RoadNetwork

    Raises:
        ValueError: For a degenerate grid
    """
    if blocks_x < 2 or blocks_y < 2:
        raise ValueError(f"Grid needs at least 2x2 blocks, got {blocks_x}x{blocks_y}")
    if block_len <= 0:
        raise ValueError(f"Block length must be > 0, got {block_len}")
    if major_period < 1:
        raise ValueError(f"Major street period must be >= 1, got {major_period}")

    width = blocks_x + 1
    nodes = tuple(Node(j * width + i, i * float(block_len), j * float(block_len))
                  for j in range(blocks_y + 1) for i in range(width))
    edges: List[Edge] = []

    def add(source: int, target: int, major: bool) -> None:
        edges.append(Edge(len(edges), source, target, float(block_len), speed_limit, major))

    for j in range(blocks_y + 1):
        for i in range(width):
            here = j * width + i
            if i < blocks_x:
                add(here, here + 1, j % major_period == 0)
                add(here + 1, here, j % major_period == 0)
            if j < blocks_y:
                add(here, here + width, i % major_period == 0)
                add(here + width, here, i % major_period == 0)

    net = RoadNetwork(nodes=nodes, edges=tuple(edges), conflict_box=conflict_box)
    logger.debug(f"Built {blocks_x}x{blocks_y} grid: {len(nodes)} nodes, {len(edges)} edges")
    return net


def random_route(net: RoadNetwork, start_edge: int, rng: np.random.Generator, min_length: float = 1000.0) -> Route:
    """Random walk from `start_edge` with uniform turns and no immediate U-turns."""
    route = [start_edge]
    total = net.edges[start_edge].length
    while total < min_length:
        options = net.successors(route[-1])
        route.append(options[int(rng.integers(len(options)))])
        total += net.edges[route[-1]].length
    return tuple(route)


def continue_route(net: RoadNetwork, last_edge: int, rng: np.random.Generator, min_length: float = 1000.0) -> Route:
    """Fresh route starting with a successor of `last_edge`."""
    options = net.successors(last_edge)
    return random_route(net, options[int(rng.integers(len(options)))], rng, min_length)


def generate_routes(net: RoadNetwork, count: int, rng: np.random.Generator, min_length: float = 1000.0,
                    starts: Optional[Sequence[int]] = None) -> List[Route]:
    """Draw `count` routes, from uniformly random start edges unless `starts` fixes them.

    Raises:
        ValueError: If count < 1 or `starts` does not hold `count` edges
    """
    if count < 1:
        raise ValueError(f"Route count must be >= 1, got {count}")
    if starts is not None and len(starts) != count:
        raise ValueError(f"Expected {count} start edges, got {len(starts)}")
    routes = []
    for k in range(count):
        start = int(rng.integers(len(net.edges))) if starts is None else int(starts[k])
        routes.append(random_route(net, start, rng, min_length))
    return routes


class BehaviorMode(Enum):
    """Driver population of a run."""
    CAREFUL = "careful"
    NOAPP = "noapp"
    ICRW = "icrw"


class BrakeTimeMode(Enum):
    HALF = "half"
    FULL = "full"


class ArrivalModel(Enum):
    """How the warning application extrapolates arrival at the conflict box."""
    CONSTANT = "constant"
    ACCELERATING = "accelerating"


@dataclass(frozen=True)
class GridSettings:
    blocks_x: int = 4
    blocks_y: int = 4
    block_len: float = 100.0
    major_period: int = 2
    conflict_box: float = 8.0


@dataclass(frozen=True)
class MobilitySettings:
    """Driver and vehicle parameters besides the comfortable deceleration."""
    accel: float = 2.5
    emergency_brake: float = 8.0
    lookahead: float = 30.0
    yield_gap: float = 1.0
    vehicle_length: float = 5.0
    standstill_gap: float = 2.0
    min_trip_length: float = 1000.0
    deadlock_timeout: float = 5.0


@dataclass(frozen=True)
class IcrwSettings:
    neighbor_ttl: float = 1.1
    brake_time: BrakeTimeMode = BrakeTimeMode.HALF
    warning_compliance: float = 0.5
    arrival_model: ArrivalModel = ArrivalModel.ACCELERATING


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulation run."""
    vehicle_count: int = 40
    sim_duration: float = 3600.0
    max_speed: float = DEFAULT_SPEED_LIMIT
    alarm_threshold: float = 1.0
    warning_threshold: float = 2.0
    deceleration: float = 4.0
    reaction_time: float = 1.0
    cam_period: float = 0.1
    time_step: float = 0.1
    channel: ChannelModel = field(default_factory=Ideal)
    behavior_mode: BehaviorMode = BehaviorMode.ICRW
    rng_seed: int = 1
    grid: GridSettings = field(default_factory=GridSettings)
    network_nodes: Optional[Tuple[Dict[str, Any], ...]] = None
    network_edges: Optional[Tuple[Dict[str, Any], ...]] = None
    mobility: MobilitySettings = field(default_factory=MobilitySettings)
    icrw: IcrwSettings = field(default_factory=IcrwSettings)
    include_truncated: bool = False
    packet_log: bool = False
    event_log: bool = True

    def validate(self) -> None:
        """Check the cross-field invariants.

        Raises:
            ValidationError: Listing every violated invariant
        """
        errors = []
        if not 0 < self.alarm_threshold < self.warning_threshold:
            errors.append(f"alarm_threshold ({self.alarm_threshold}) and warning_threshold "
                          f"({self.warning_threshold}) must satisfy 0 < alarm < warning")
        if self.deceleration <= 0:
            errors.append(f"deceleration must be > 0, got {self.deceleration}")
        if self.reaction_time < 0:
            errors.append(f"reaction_time must be >= 0, got {self.reaction_time}")
        if self.time_step <= 0:
            errors.append(f"time_step must be > 0, got {self.time_step}")
        elif self.cam_period < self.time_step:
            errors.append(f"cam_period ({self.cam_period}) must be >= time_step ({self.time_step})")
        if self.vehicle_count < 2:
            errors.append(f"vehicle_count must be >= 2, got {self.vehicle_count}")
        if self.sim_duration <= 0:
            errors.append(f"sim_duration must be > 0, got {self.sim_duration}")
        if self.max_speed <= 0:
            errors.append(f"max_speed must be > 0, got {self.max_speed}")
        if self.rng_seed < 0:
            errors.append(f"rng_seed must be >= 0, got {self.rng_seed}")
        if not 0.0 <= self.icrw.warning_compliance <= 1.0:
            errors.append(f"icrw.warning_compliance must be in [0, 1], got {self.icrw.warning_compliance}")
        if (self.network_nodes is None) != (self.network_edges is None):
            errors.append("network.nodes and network.edges must be given together")
        if errors:
            raise ValidationError("Invalid scenario configuration", errors)

    def build_network(self) -> RoadNetwork:
        """Network of the run: the explicit node/edge lists if present, else the grid."""
        if self.network_nodes is not None and self.network_edges is not None:
            return RoadNetwork.from_lists(list(self.network_nodes), list(self.network_edges),
                                          conflict_box=self.grid.conflict_box, speed_limit=self.max_speed)
        g = self.grid
        return build_grid(g.blocks_x, g.blocks_y, g.block_len, g.major_period, g.conflict_box, self.max_speed)

    def with_alarm_threshold(self, alarm_threshold: float) -> "ScenarioConfig":
        """Copy with the alarm threshold set and the warning threshold at twice its value."""
        return replace(self, alarm_threshold=alarm_threshold, warning_threshold=2.0 * alarm_threshold)

    @property
    def steps(self) -> int:
        return int(round(self.sim_duration / self.time_step))

    @classmethod
    def from_flat(cls, flat: Dict[str, Any]) -> "ScenarioConfig":
        """Build a configuration from flat dotted keys; missing keys take defaults.

        Raises:
            ValidationError: If a value cannot be interpreted
        """
        try:
            alarm = float(flat.get("alarm_threshold", 1.0))
            warning = flat.get("warning_threshold")
            nodes = flat.get("network.nodes")
            edges = flat.get("network.edges")
            return cls(
                vehicle_count=int(flat.get("vehicle_count", 40)),
                sim_duration=float(flat.get("sim_duration", 3600.0)),
                max_speed=float(flat.get("max_speed", DEFAULT_SPEED_LIMIT)),
                alarm_threshold=alarm,
                warning_threshold=2.0 * alarm if warning is None else float(warning),
                deceleration=float(flat.get("deceleration", 4.0)),
                reaction_time=float(flat.get("reaction_time", 1.0)),
                cam_period=float(flat.get("cam_period", 0.1)),
                time_step=float(flat.get("time_step", 0.1)),
                channel=channel_from_flat(flat),
                behavior_mode=BehaviorMode(flat.get("behavior_mode", "icrw")),
                rng_seed=int(flat.get("rng_seed", 1)),
                grid=GridSettings(
                    blocks_x=int(flat.get("grid.blocks_x", 4)),
                    blocks_y=int(flat.get("grid.blocks_y", 4)),
                    block_len=float(flat.get("grid.block_len", 100.0)),
                    major_period=int(flat.get("grid.major_period", 2)),
                    conflict_box=float(flat.get("grid.conflict_box", 8.0)),
                ),
                network_nodes=None if nodes is None else tuple(nodes),
                network_edges=None if edges is None else tuple(edges),
                mobility=MobilitySettings(
                    accel=float(flat.get("mobility.accel", 2.5)),
                    emergency_brake=float(flat.get("mobility.emergency_brake", 8.0)),
                    lookahead=float(flat.get("mobility.lookahead", 30.0)),
                    yield_gap=float(flat.get("mobility.yield_gap", 1.0)),
                    vehicle_length=float(flat.get("mobility.vehicle_length", 5.0)),
                    standstill_gap=float(flat.get("mobility.standstill_gap", 2.0)),
                    min_trip_length=float(flat.get("mobility.min_trip_length", 1000.0)),
                    deadlock_timeout=float(flat.get("mobility.deadlock_timeout", 5.0)),
                ),
                icrw=IcrwSettings(
                    neighbor_ttl=float(flat.get("icrw.neighbor_ttl", 1.1)),
                    brake_time=BrakeTimeMode(flat.get("icrw.brake_time", "half")),
                    warning_compliance=float(flat.get("icrw.warning_compliance", 0.5)),
                    arrival_model=ArrivalModel(flat.get("icrw.arrival_model", "accelerating")),
                ),
                include_truncated=bool(flat.get("metrics.include_truncated", False)),
                packet_log=bool(flat.get("output.packet_log", False)),
                event_log=bool(flat.get("output.event_log", True)),
            )
        except (TypeError, ValueError) as e:
            raise ValidationError(f"Invalid configuration value: {e}", [str(e)]) from e

    def to_flat(self) -> Dict[str, Any]:
        """Flat dotted keys describing this configuration."""
        flat: Dict[str, Any] = {
            "vehicle_count": self.vehicle_count,
            "sim_duration": self.sim_duration,
            "max_speed": self.max_speed,
            "alarm_threshold": self.alarm_threshold,
            "warning_threshold": self.warning_threshold,
            "deceleration": self.deceleration,
            "reaction_time": self.reaction_time,
            "cam_period": self.cam_period,
            "time_step": self.time_step,
            "behavior_mode": self.behavior_mode.value,
            "rng_seed": self.rng_seed,
        }
        flat.update({f"grid.{k}": v for k, v in asdict(self.grid).items()})
        if self.network_nodes is not None:
            flat["network.nodes"] = list(self.network_nodes)
            flat["network.edges"] = list(self.network_edges or ())
        flat.update(channel_to_flat(self.channel))
        flat.update({f"mobility.{k}": v for k, v in asdict(self.mobility).items()})
        flat["icrw.neighbor_ttl"] = self.icrw.neighbor_ttl
        flat["icrw.brake_time"] = self.icrw.brake_time.value
        flat["icrw.warning_compliance"] = self.icrw.warning_compliance
        flat["icrw.arrival_model"] = self.icrw.arrival_model.value
        flat["metrics.include_truncated"] = self.include_truncated
        flat["output.packet_log"] = self.packet_log
        flat["output.event_log"] = self.event_log
        return flat
