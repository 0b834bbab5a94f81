"""Tapped-delay-line profiles for urban vehicular links."""

from dataclasses import dataclass
from enum import Enum, auto
from typing import Dict, Tuple

import numpy as np


class SpectrumKind(Enum):
    """Doppler spectrum shape of a tap."""
    STATIC = auto()
    HALF_BATHTUB = auto()


@dataclass(frozen=True)
class Tap:
    """One tap of a tapped-delay-line profile."""
    power_db: float
    delay_ns: float
    doppler_hz: float
    kind: SpectrumKind


@dataclass(frozen=True)
class TapProfile:
    """An ordered set of taps with strictly increasing delays."""
    name: str
    taps: Tuple[Tap, ...]

    def __post_init__(self):
        if not self.taps:
            raise ValueError(f"Profile {self.name} has no taps")
        first = self.taps[0]
        if first.kind is not SpectrumKind.STATIC or first.delay_ns != 0 or first.doppler_hz != 0:
            raise ValueError(f"Profile {self.name}: tap 1 must be static at zero delay")
        delays = [tap.delay_ns for tap in self.taps]
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ValueError(f"Profile {self.name}: delays must be strictly increasing")
        for tap in self.taps:
            if tap.kind is SpectrumKind.HALF_BATHTUB and tap.doppler_hz == 0:
                raise ValueError(f"Profile {self.name}: half-bathtub tap needs a nonzero Doppler")

    @property
    def weights(self) -> np.ndarray:
        """Linear tap powers normalized to unit total mean power."""
        linear = np.array([10.0 ** (tap.power_db / 10.0) for tap in self.taps])
        return linear / linear.sum()

    @property
    def static_weight(self) -> float:
        """Total weight carried by static taps (lower bound of the aggregate gain)."""
        weights = self.weights
        return float(sum(w for w, tap in zip(weights, self.taps) if tap.kind is SpectrumKind.STATIC))


URBAN_LOS = TapProfile(
    name="urban-los",
    taps=(
        Tap(0.0, 0.0, 0.0, SpectrumKind.STATIC),
        Tap(-8.0, 117.0, 236.0, SpectrumKind.HALF_BATHTUB),
        Tap(-10.0, 183.0, -157.0, SpectrumKind.HALF_BATHTUB),
        Tap(-15.0, 333.0, 492.0, SpectrumKind.HALF_BATHTUB),
    ),
)

URBAN_NLOS = TapProfile(
    name="urban-nlos",
    taps=(
        Tap(0.0, 0.0, 0.0, SpectrumKind.STATIC),
        Tap(-3.0, 267.0, 295.0, SpectrumKind.HALF_BATHTUB),
        Tap(-4.0, 400.0, -98.0, SpectrumKind.HALF_BATHTUB),
        Tap(-10.0, 533.0, 591.0, SpectrumKind.HALF_BATHTUB),
    ),
)

PROFILES: Dict[str, TapProfile] = {
    URBAN_LOS.name: URBAN_LOS,
    URBAN_NLOS.name: URBAN_NLOS,
}
