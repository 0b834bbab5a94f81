"""Channel models, LOS classification and packet adjudication."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Dict, List, Protocol, Sequence, Tuple, Union

import numpy as np

from .fading import LinkStore, Shadowing, link_gain_db
from .link import LinkBudget, LinkCurve, packet_error_probability
from .profiles import URBAN_LOS, URBAN_NLOS, TapProfile

if TYPE_CHECKING:
    from ..scenario import RoadNetwork

logger = logging.getLogger(__name__)


class Located(Protocol):
    """Anything placed on the road network (a vehicle state)."""
    id: int
    edge: int
    s: float


class LosClass(Enum):
    """Propagation class of a link."""
    LOS = "los"
    NLOS = "nlos"


class LosMode(Enum):
    """How an emulated channel picks its tap profile."""
    AUTO = "auto"
    LOS = "los"
    NLOS = "nlos"


@dataclass(frozen=True)
class Ideal:
    """Every packet is delivered."""


@dataclass(frozen=True)
class IidLoss:
    """Every packet is lost independently with probability `per`."""
    per: float

    def __post_init__(self):
        if not 0.0 <= self.per <= 1.0:
            raise ValueError(f"Packet error probability must be in [0, 1], got {self.per}")


@dataclass(frozen=True)
class DistanceCutoff:
    """Delivered iff the source-destination distance is at most `dmax`."""
    dmax: float

    def __post_init__(self):
        if self.dmax <= 0:
            raise ValueError(f"Cutoff distance must be > 0, got {self.dmax}")


@dataclass(frozen=True)
class Emulated:
    """Pathloss, tapped-delay-line fading and a logistic SNR to PER curve."""
    packet_bytes: int = 100
    los_mode: LosMode = LosMode.AUTO
    budget: LinkBudget = field(default_factory=LinkBudget)
    curve: LinkCurve = field(default_factory=LinkCurve)
    los_profile: TapProfile = URBAN_LOS
    nlos_profile: TapProfile = URBAN_NLOS
    sinusoids: int = 64
    los_radius: float = 10.0
    shadowing: Shadowing = field(default_factory=Shadowing)

    def __post_init__(self):
        if self.packet_bytes <= 0:
            raise ValueError(f"Packet length must be > 0, got {self.packet_bytes}")
        if self.sinusoids < 1:
            raise ValueError(f"Number of sinusoids must be >= 1, got {self.sinusoids}")
        if self.los_radius < 0:
            raise ValueError(f"LOS radius must be >= 0, got {self.los_radius}")


ChannelModel = Union[Ideal, IidLoss, DistanceCutoff, Emulated]


def classify_los(tx: Located, rx: Located, net: "RoadNetwork", los_radius: float = 10.0) -> LosClass:
    """Classify the propagation class between two vehicles.

    A link is LOS when both vehicles are on the same street axis, when one of
    them is inside an intersection box and the other is on a street incident to
    that intersection, or when both are within `los_radius` of the same
    intersection. Every other link is blocked by a building corner.
    """
    if net.street_axis(tx.edge) == net.street_axis(rx.edge):
        return LosClass.LOS

    tx_pos = net.position(tx.edge, tx.s)
    rx_pos = net.position(rx.edge, rx.s)
    tx_nodes = net.edge_endpoints(tx.edge)
    rx_nodes = net.edge_endpoints(rx.edge)

    for node in set(tx_nodes) & set(rx_nodes):
        if net.in_box(node, tx_pos) or net.in_box(node, rx_pos):
            return LosClass.LOS
        center = net.node_position(node)
        if math.dist(center, tx_pos) <= los_radius and math.dist(center, rx_pos) <= los_radius:
            return LosClass.LOS
    return LosClass.NLOS


@dataclass
class Adjudication:
    """Per-receiver outcome of one broadcast."""
    receivers: List[int]
    delivered: np.ndarray
    distance: np.ndarray
    snr_db: np.ndarray


def adjudicate_batch(model: ChannelModel, tx: Located, receivers: Sequence[Located], t: float,
                     links: LinkStore, rng: np.random.Generator, net: "RoadNetwork",
                     need_snr: bool = False) -> Adjudication:
    """Adjudicate one broadcast for every receiver with independent draws.

    For the emulated model the static tap, together with the link shadowing,
    bounds the aggregate gain from below, so a draw that already succeeds at the lower-bound SNR is delivered
    without evaluating the sinusoid banks. The decision is the same as with full
    evaluation; `need_snr` forces full evaluation to report the SNR.

    Args:
        model: Channel model
        tx: Transmitting vehicle
        receivers: Receiving vehicles (the transmitter excluded)
        t: Simulation time in seconds
        links: Fading link store of the run
        rng: Channel random stream
        net: Road network
        need_snr: Compute the exact SNR of every receiver

    Returns:
        Adjudication with one entry per receiver, in order
    """
    ids = [rx.id for rx in receivers]
    n = len(ids)
    tx_pos = np.asarray(net.position(tx.edge, tx.s))
    rx_pos = np.array([net.position(rx.edge, rx.s) for rx in receivers], dtype=float).reshape(n, 2)
    distance = np.linalg.norm(rx_pos - tx_pos, axis=1) if n else np.zeros(0)
    snr = np.full(n, np.nan)

    match model:
        case Ideal():
            delivered = np.ones(n, dtype=bool)
        case IidLoss(per=per):
            delivered = rng.random(n) >= per
        case DistanceCutoff(dmax=dmax):
            delivered = distance <= dmax
        case Emulated():
            delivered, snr = _adjudicate_emulated(model, tx, receivers, distance, t, links, rng, net, need_snr)
        case _:
            raise TypeError(f"Unknown channel model: {model!r}")

    return Adjudication(receivers=ids, delivered=delivered, distance=distance, snr_db=snr)


def _adjudicate_emulated(model: Emulated, tx: Located, receivers: Sequence[Located], distance: np.ndarray,
                         t: float, links: LinkStore, rng: np.random.Generator, net: "RoadNetwork",
                         need_snr: bool) -> Tuple[np.ndarray, np.ndarray]:
    n = len(receivers)
    if model.los_mode is LosMode.AUTO:
        nlos = np.array([classify_los(tx, rx, net, model.los_radius) is LosClass.NLOS for rx in receivers],
                        dtype=bool)
    else:
        nlos = np.full(n, model.los_mode is LosMode.NLOS)

    d = np.maximum(distance, 1.0)
    draws = rng.random(n)
    fading = [links.get(tx.id, rx.id, bool(rx_nlos), t) for rx, rx_nlos in zip(receivers, nlos)]
    shadow_db = np.array([link.shadowing_db(t) for link in fading], dtype=float)
    static_db = np.where(nlos, 10.0 * math.log10(model.nlos_profile.static_weight),
                         10.0 * math.log10(model.los_profile.static_weight))
    snr_floor = np.atleast_1d(model.budget.snr_db(d, static_db + shadow_db, nlos))
    delivered = draws >= packet_error_probability(snr_floor, model.packet_bytes, model.curve)

    snr = np.full(n, np.nan)
    pending = np.arange(n) if need_snr else np.flatnonzero(~delivered)
    for i in pending:
        gain_db = link_gain_db(fading[i], t) + shadow_db[i]
        snr[i] = model.budget.snr_db(float(d[i]), gain_db, bool(nlos[i]))
        delivered[i] = draws[i] >= packet_error_probability(snr[i], model.packet_bytes, model.curve)
    return delivered, snr


def adjudicate(model: ChannelModel, tx: Located, rx: Located, t: float, links: LinkStore,
               rng: np.random.Generator, net: "RoadNetwork") -> bool:
    """Decide whether one packet from `tx` reaches `rx`.

    Raises:
        ValueError: If transmitter and receiver are the same vehicle
    """
    if tx.id == rx.id:
        raise ValueError("Transmitter and receiver must differ")
    return bool(adjudicate_batch(model, tx, [rx], t, links, rng, net).delivered[0])


def parse_channel(text: str, template: Emulated = Emulated()) -> ChannelModel:
    """Parse a compact channel label.

    Accepted forms: `ideal`, `per:<p>`, `dmax:<m>`, `emu:<bytes>`,
    `emu:auto:<bytes>`, `emu:los:<bytes>`, `emu:nlos:<bytes>`. Emulated channels
    inherit link budget and curve settings from `template`.

    Raises:
        ValueError: If the label cannot be parsed
    """
    parts = text.strip().lower().split(":")
    try:
        match parts:
            case ["ideal"]:
                return Ideal()
            case ["per", value]:
                return IidLoss(per=float(value))
            case ["dmax", value]:
                return DistanceCutoff(dmax=float(value))
            case ["emu", length]:
                return _replace_emulated(template, int(length), LosMode.AUTO)
            case ["emu", mode, length]:
                return _replace_emulated(template, int(length), LosMode(mode))
    except ValueError as e:
        raise ValueError(f"Invalid channel '{text}': {e}") from e
    raise ValueError(f"Invalid channel '{text}': expected ideal, per:<p>, dmax:<m> or emu:[auto|los|nlos:]<bytes>")


def _replace_emulated(template: Emulated, packet_bytes: int, los_mode: LosMode) -> Emulated:
    return Emulated(packet_bytes=packet_bytes, los_mode=los_mode, budget=template.budget, curve=template.curve,
                    los_profile=template.los_profile, nlos_profile=template.nlos_profile,
                    sinusoids=template.sinusoids, los_radius=template.los_radius, shadowing=template.shadowing)


def channel_label(model: ChannelModel) -> str:
    """Compact label of a channel model (inverse of `parse_channel`)."""
    match model:
        case Ideal():
            return "ideal"
        case IidLoss(per=per):
            return f"per:{per:g}"
        case DistanceCutoff(dmax=dmax):
            return f"dmax:{dmax:g}"
        case Emulated(packet_bytes=length, los_mode=mode):
            return f"emu:{mode.value}:{length}"
    raise TypeError(f"Unknown channel model: {model!r}")


def channel_from_flat(flat: Dict[str, Any]) -> ChannelModel:
    """Build a channel model from flat `channel.*` configuration keys."""
    kind = flat.get("channel.kind", "ideal")
    if kind == "ideal":
        return Ideal()
    if kind == "per":
        return IidLoss(per=float(flat.get("channel.per", 0.5)))
    if kind == "dmax":
        return DistanceCutoff(dmax=float(flat.get("channel.dmax", 60.0)))
    if kind == "emu":
        return Emulated(
            packet_bytes=int(flat.get("channel.packet_bytes", 100)),
            los_mode=LosMode(flat.get("channel.los_mode", "auto")),
            budget=LinkBudget(
                tx_power_dbm=float(flat.get("channel.tx_power_dbm", 23.0)),
                noise_floor_dbm=float(flat.get("channel.noise_floor_dbm", -98.0)),
                nlos_extra_loss_db=float(flat.get("channel.nlos_extra_loss_db", 20.0)),
            ),
            curve=LinkCurve(
                slope=float(flat.get("channel.per_slope", 1.0)),
                midpoint_100=float(flat.get("channel.per_midpoint_100", 5.0)),
                midpoint_500=float(flat.get("channel.per_midpoint_500", 7.0)),
            ),
            sinusoids=int(flat.get("channel.sinusoids", 64)),
            los_radius=float(flat.get("channel.los_radius", 10.0)),
            shadowing=Shadowing(
                los_db=float(flat.get("channel.shadowing_los_db", 3.0)),
                nlos_db=float(flat.get("channel.shadowing_nlos_db", 4.0)),
                decorrelation_s=float(flat.get("channel.shadowing_decorrelation_s", 1.0)),
            ),
        )
    raise ValueError(f"Unknown channel kind '{kind}'")


def channel_to_flat(model: ChannelModel) -> Dict[str, Any]:
    """Flat `channel.*` keys describing a channel model."""
    match model:
        case Ideal():
            return {"channel.kind": "ideal"}
        case IidLoss(per=per):
            return {"channel.kind": "per", "channel.per": per}
        case DistanceCutoff(dmax=dmax):
            return {"channel.kind": "dmax", "channel.dmax": dmax}
        case Emulated():
            return {
                "channel.kind": "emu",
                "channel.packet_bytes": model.packet_bytes,
                "channel.los_mode": model.los_mode.value,
                "channel.tx_power_dbm": model.budget.tx_power_dbm,
                "channel.noise_floor_dbm": model.budget.noise_floor_dbm,
                "channel.nlos_extra_loss_db": model.budget.nlos_extra_loss_db,
                "channel.per_slope": model.curve.slope,
                "channel.per_midpoint_100": model.curve.midpoint_100,
                "channel.per_midpoint_500": model.curve.midpoint_500,
                "channel.sinusoids": model.sinusoids,
                "channel.los_radius": model.los_radius,
                "channel.shadowing_los_db": model.shadowing.los_db,
                "channel.shadowing_nlos_db": model.shadowing.nlos_db,
                "channel.shadowing_decorrelation_s": model.shadowing.decorrelation_s,
            }
    raise TypeError(f"Unknown channel model: {model!r}")
