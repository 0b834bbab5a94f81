"""Time-stepped co-simulation loop and parameter sweeps."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .channel.fading import LinkStore
from .channel.models import Emulated, Ideal, channel_label, parse_channel
from .icrw import Kinematics, RiskEstimator, RiskLevel
from .messaging import CamScheduler, NeighborTable, PacketRecord, deliver, due_cams
from .metrics import MetricSummary, collisions_per_hour, mean_and_half_width, mean_pace
from .mobility import (Attention, CollisionEvent, DriverParams, Traffic, TripSample, apply_driver_reaction,
                       stop_distance)
from .rng import RandomStreams
from .scenario import ArrivalModel, BehaviorMode, ScenarioConfig

logger = logging.getLogger(__name__)

NOAPP_LABEL = "noapp"


@dataclass
class SimulationResult:
    """Everything one run produced."""
    config: ScenarioConfig
    collisions: List[CollisionEvent] = field(default_factory=list)
    trips: List[TripSample] = field(default_factory=list)
    in_progress: List[TripSample] = field(default_factory=list)
    packets_sent: int = 0
    packets_delivered: int = 0
    warnings: int = 0
    alarms: int = 0
    packet_log: List[PacketRecord] = field(default_factory=list)
    events: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def seed(self) -> int:
        return self.config.rng_seed

    def config_echo(self) -> Dict[str, Any]:
        return self.config.to_flat()


class Simulation:
    """One deterministic run of the co-simulator.

    Per step, in order: due CAMs are adjudicated and fed into the neighbor
    tables, the warning application classifies every approach, drivers react,
    careful drivers decide whether to yield and claim intersections, all
    vehicles move, and collisions are detected and resolved by respawn. With
    careful or distracted-only drivers no CAM is processed at all.
    """

    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        self.net = config.build_network()
        self.streams = RandomStreams(config.rng_seed)
        self.params = DriverParams.from_config(config)
        self.messaging = config.behavior_mode is BehaviorMode.ICRW
        attention = Attention.CAREFUL if config.behavior_mode is BehaviorMode.CAREFUL else Attention.DISTRACTED
        self.traffic = Traffic(self.net, self.params, self.streams, attention)
        self.traffic.populate(config.vehicle_count)

        channel = config.channel
        emulated = channel if isinstance(channel, Emulated) else Emulated()
        self.links = LinkStore(self.streams, emulated.los_profile, emulated.nlos_profile, emulated.sinusoids,
                               emulated.shadowing)
        self.packet_bytes = emulated.packet_bytes
        self.scheduler = CamScheduler(config.cam_period, config.time_step, self.streams.get("cam"))
        self.tables: Dict[int, NeighborTable] = {}
        for vid in sorted(self.traffic.vehicles):
            self._register(vid)
        kinematics = None
        if config.icrw.arrival_model is ArrivalModel.ACCELERATING:
            kinematics = Kinematics(self.params.accel, self.params.max_speed, self.params.vehicle_length)
        self.estimator = RiskEstimator(self.net, config.alarm_threshold, config.warning_threshold,
                                       config.deceleration, config.reaction_time, config.icrw.neighbor_ttl,
                                       config.icrw.brake_time, kinematics)
        self.result = SimulationResult(config=config)

    def _register(self, vid: int) -> None:
        self.scheduler.register(vid)
        self.tables[vid] = NeighborTable(self.config.icrw.neighbor_ttl)

    def _forget(self, vid: int) -> None:
        self.scheduler.forget(vid)
        self.tables.pop(vid, None)
        self.links.forget(vid)

    def _exchange_cams(self, step: int, t: float) -> None:
        vehicles = self.traffic.ordered()
        rng = self.streams.get("channel")
        log = self.result.packet_log if self.config.packet_log else None
        for cam in due_cams(vehicles, step, t, self.scheduler, self.net, self.packet_bytes):
            sender = self.traffic.vehicles[cam.sender]
            receivers = [v for v in vehicles if v.id != cam.sender]
            outcome = deliver(cam, sender, receivers, self.config.channel, self.links, rng, self.net, log)
            self.result.packets_sent += len(outcome)
            for rx, delivered in outcome.items():
                self.result.packets_delivered += delivered
                self.tables[rx].ingest(cam, delivered, t)

    def _assess_risks(self, t: float) -> None:
        rng = self.streams.get("reaction")
        compliance = self.config.icrw.warning_compliance
        for vehicle in self.traffic.ordered():
            d = stop_distance(vehicle, self.net)
            risk = self.estimator.assess(vehicle.edge, d, vehicle.v, self.tables[vehicle.id].records(t), t)
            if risk.level is not RiskLevel.IDLE:
                logger.debug(f"t={t:.1f} vehicle {vehicle.id}: {risk.level.name} tt={risk.tt_self:.2f} "
                             f"tt_n={risk.tt_neighbor:.2f} tb={risk.tb_self:.2f} neighbor={risk.neighbor_id}")
            if risk.level is not vehicle.risk and risk.level is not RiskLevel.IDLE:
                if risk.level is RiskLevel.WARNING:
                    self.result.warnings += 1
                else:
                    self.result.alarms += 1
                self._event(t, risk.level.name.lower(), vehicle=vehicle.id, neighbor=risk.neighbor_id,
                            tt_self=_finite(risk.tt_self), tt_neighbor=_finite(risk.tt_neighbor))
            vehicle.risk = risk.level
            apply_driver_reaction(vehicle, risk, rng, compliance)

    def _event(self, t: float, kind: str, **fields: Any) -> None:
        if self.config.event_log:
            self.result.events.append({"time": round(t, 6), "type": kind, **fields})

    def step(self, step: int) -> None:
        dt = self.config.time_step
        t = step * dt
        if self.messaging:
            self._exchange_cams(step, t)
            self._assess_risks(t)
        self.traffic.plan()
        self.result.trips.extend(self.traffic.advance(t))

        end = (step + 1) * dt
        events = self.traffic.collisions(end)
        if not events:
            return
        crashed = set()
        for event in events:
            logger.debug(f"Collision at node {event.node} between {event.vehicles} at t={end:.1f}")
            self._event(end, "collision", node=event.node, vehicles=list(event.vehicles))
            crashed.update(event.vehicles)
        self.result.collisions.extend(events)
        trips, new_ids = self.traffic.respawn(crashed, end)
        self.result.trips.extend(trips)
        for vid in sorted(crashed):
            self._forget(vid)
        for vid in new_ids:
            self._register(vid)

    def run(self, progress: Optional[Callable[[int, int], None]] = None) -> SimulationResult:
        steps = self.config.steps
        logger.info(f"Run start: mode={self.config.behavior_mode.value} "
                    f"channel={channel_label(self.config.channel)} seed={self.config.rng_seed} steps={steps}")
        for k in range(steps):
            self.step(k)
            if progress is not None:
                progress(k + 1, steps)
        self.result.in_progress = self.traffic.in_progress()
        logger.info(f"Run finished: {len(self.result.collisions)} collisions, {len(self.result.trips)} trips")
        return self.result


def _finite(value: Optional[float]) -> Optional[float]:
    if value is None or math.isinf(value):
        return None
    return round(value, 6)


def run(config: ScenarioConfig, progress: Optional[Callable[[int, int], None]] = None) -> SimulationResult:
    """Execute one simulation run.

    Raises:
        ValidationError: If the configuration violates its invariants
    """
    return Simulation(config).run(progress)


def baseline_config(config: ScenarioConfig) -> ScenarioConfig:
    """Careful-driver counterpart of a run (same network, seed and routes)."""
    return replace(config, behavior_mode=BehaviorMode.CAREFUL, packet_log=False, event_log=False)


def cell_config(base: ScenarioConfig, label: str, alarm_threshold: float, seed: int) -> ScenarioConfig:
    """Configuration of one sweep cell; `noapp` selects distracted drivers without the application."""
    config = replace(base.with_alarm_threshold(alarm_threshold), rng_seed=seed, packet_log=False, event_log=False)
    if label == NOAPP_LABEL:
        return replace(config, behavior_mode=BehaviorMode.NOAPP, channel=Ideal())
    template = base.channel if isinstance(base.channel, Emulated) else Emulated()
    return replace(config, behavior_mode=BehaviorMode.ICRW, channel=parse_channel(label, template))


@dataclass(frozen=True)
class RunDigest:
    """Compact outcome of a sweep run."""
    seed: int
    collisions_per_hour: float
    mean_pace: float
    packets_sent: int
    packets_delivered: int


def digest(config: ScenarioConfig) -> RunDigest:
    result = run(config)
    return RunDigest(seed=config.rng_seed, collisions_per_hour=collisions_per_hour(result),
                     mean_pace=mean_pace(result.trips, config.include_truncated),
                     packets_sent=result.packets_sent, packets_delivered=result.packets_delivered)


@dataclass(frozen=True)
class SweepRow:
    """One (channel, alarm threshold) cell aggregated over seeds."""
    channel: str
    alarm_threshold: float
    warning_threshold: float
    summary: MetricSummary
    delivery_ratio: float


def sweep(base: ScenarioConfig, alarm_thresholds: Sequence[float], channels: Sequence[str], seeds: Sequence[int],
          workers: int = 1, progress: Optional[Callable[[int, int], None]] = None) -> List[SweepRow]:
    """Run every (alarm threshold, channel, seed) cell and aggregate over seeds.

    The warning threshold of each cell is twice its alarm threshold. One careful
    baseline per seed is computed and reused by every cell; distracted-only
    cells do not depend on the threshold and are run once per seed as well.
    Rows come out in (threshold, channel) order regardless of `workers`.

    Raises:
        ValueError: If an axis is empty or a channel label is invalid
    """
    if not alarm_thresholds or not channels or not seeds:
        raise ValueError("Sweep axes must not be empty")
    for label in channels:
        if label != NOAPP_LABEL:
            parse_channel(label)

    tasks: Dict[Tuple[Any, ...], ScenarioConfig] = {}
    for seed in seeds:
        tasks[("baseline", seed)] = baseline_config(replace(base, rng_seed=seed, packet_log=False, event_log=False))
    for alarm in alarm_thresholds:
        for label in channels:
            for seed in seeds:
                key = (NOAPP_LABEL, seed) if label == NOAPP_LABEL else (label, alarm, seed)
                if key not in tasks:
                    tasks[key] = cell_config(base, label, alarm, seed)

    keys = list(tasks)
    configs = [tasks[k] for k in keys]
    logger.info(f"Sweep: {len(alarm_thresholds)} thresholds x {len(channels)} channels x {len(seeds)} seeds, "
                f"{len(configs)} distinct runs, {workers} worker(s)")
    digests = _execute(configs, workers, progress)
    by_key = dict(zip(keys, digests))

    rows = []
    for alarm in alarm_thresholds:
        for label in channels:
            cells = [by_key[(NOAPP_LABEL, s) if label == NOAPP_LABEL else (label, alarm, s)] for s in seeds]
            baselines = [by_key[("baseline", s)] for s in seeds]
            cph, cph_hw = mean_and_half_width([c.collisions_per_hour for c in cells])
            gain, gain_hw = mean_and_half_width([b.mean_pace - c.mean_pace for b, c in zip(baselines, cells)])
            sent = sum(c.packets_sent for c in cells)
            delivered = sum(c.packets_delivered for c in cells)
            rows.append(SweepRow(
                channel=label,
                alarm_threshold=alarm,
                warning_threshold=2.0 * alarm,
                summary=MetricSummary(cph, gain, cph_hw, gain_hw, len(seeds)),
                delivery_ratio=delivered / sent if sent else math.nan,
            ))
    return rows


def _execute(configs: List[ScenarioConfig], workers: int,
             progress: Optional[Callable[[int, int], None]]) -> List[RunDigest]:
    results: List[Optional[RunDigest]] = [None] * len(configs)
    if workers <= 1:
        for i, config in enumerate(configs):
            results[i] = digest(config)
            if progress is not None:
                progress(i + 1, len(configs))
        return results

    with ProcessPoolExecutor(max_workers=workers) as executor:
        for i, outcome in enumerate(executor.map(digest, configs)):
            results[i] = outcome
            if progress is not None:
                progress(i + 1, len(configs))
    return results
