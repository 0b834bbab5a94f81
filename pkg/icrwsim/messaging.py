"""CAM generation, broadcast delivery and neighbor tables."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .channel.fading import LinkStore
from .channel.models import ChannelModel, adjudicate_batch
from .icrw import NeighborRecord
from .mobility import VehicleState
from .scenario import RoadNetwork

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cam:
    """Cooperative awareness message."""
    sender: int
    timestamp: float
    x: float
    y: float
    speed: float
    heading: float
    length: int


@dataclass(frozen=True)
class PacketRecord:
    """One adjudicated (CAM, receiver) pair."""
    time: float
    tx: int
    rx: int
    distance: float
    snr_db: float
    delivered: bool


class CamScheduler:
    """Fixed-rate CAM schedule with a random phase offset per vehicle.

    Offsets are whole steps in [0, period_steps), so CAM instants fall on the
    simulation grid.
    """

    def __init__(self, cam_period: float, dt: float, rng: np.random.Generator):
        self.period_steps = max(1, int(round(cam_period / dt)))
        self.rng = rng
        self.offsets: Dict[int, int] = {}

    def register(self, vehicle_id: int) -> None:
        self.offsets[vehicle_id] = int(self.rng.integers(self.period_steps))

    def forget(self, vehicle_id: int) -> None:
        self.offsets.pop(vehicle_id, None)

    def fires(self, vehicle_id: int, step: int) -> bool:
        offset = self.offsets.get(vehicle_id)
        return offset is not None and (step - offset) % self.period_steps == 0


def make_cam(vehicle: VehicleState, net: RoadNetwork, t: float, length: int) -> Cam:
    x, y = net.position(vehicle.edge, vehicle.s)
    return Cam(sender=vehicle.id, timestamp=t, x=x, y=y, speed=vehicle.v,
               heading=net.heading_angle(vehicle.edge), length=length)


def due_cams(states: Sequence[VehicleState], step: int, t: float, scheduler: CamScheduler,
             net: RoadNetwork, length: int = 100) -> List[Cam]:
    """CAMs generated at step `step` (time `t`), in sender id order.

    Vehicles without a registered schedule (removed ids) send nothing.
    """
    return [make_cam(vehicle, net, t, length) for vehicle in sorted(states, key=lambda x: x.id)
            if scheduler.fires(vehicle.id, step)]


def deliver(cam: Cam, sender: VehicleState, receivers: Sequence[VehicleState], model: ChannelModel,
            links: LinkStore, rng: np.random.Generator, net: RoadNetwork,
            log: Optional[List[PacketRecord]] = None) -> Dict[int, bool]:
    """Adjudicate one CAM independently for every receiver.

    Args:
        cam: The broadcast message
        sender: Ground-truth state of the sender, used for geometry
        receivers: Receiving vehicles (sender excluded)
        model: Channel model
        links: Fading link store
        rng: Channel random stream
        net: Road network
        log: When given, one PacketRecord per receiver is appended

    Returns:
        Delivery map keyed by receiver id
    """
    outcome = adjudicate_batch(model, sender, receivers, cam.timestamp, links, rng, net, need_snr=log is not None)
    if log is not None:
        for i, rx in enumerate(outcome.receivers):
            log.append(PacketRecord(cam.timestamp, cam.sender, rx, float(outcome.distance[i]),
                                    float(outcome.snr_db[i]), bool(outcome.delivered[i])))
    return {rx: bool(ok) for rx, ok in zip(outcome.receivers, outcome.delivered)}


class NeighborTable:
    """Latest CAM-derived record of every neighbor heard by one vehicle."""

    def __init__(self, ttl: float = 1.1):
        self.ttl = ttl
        self._records: Dict[int, NeighborRecord] = {}

    def ingest(self, cam: Cam, delivered: bool, t: float) -> "NeighborTable":
        """Upsert the sender's record if the CAM was delivered."""
        if delivered:
            current = self._records.get(cam.sender)
            if current is None or cam.timestamp >= current.timestamp:
                self._records[cam.sender] = NeighborRecord(cam.sender, cam.x, cam.y, cam.speed, cam.heading,
                                                           cam.timestamp)
        return self

    def records(self, now: float) -> List[NeighborRecord]:
        """Unexpired records; expired ones are dropped on the way."""
        expired = [k for k, r in self._records.items() if r.expired(now, self.ttl)]
        for key in expired:
            del self._records[key]
        return [self._records[k] for k in sorted(self._records)]

    def get(self, sender: int) -> Optional[NeighborRecord]:
        return self._records.get(sender)

    def __len__(self) -> int:
        return len(self._records)


def ingest(cam: Cam, delivered: bool, table: NeighborTable, t: float) -> NeighborTable:
    return table.ingest(cam, delivered, t)
