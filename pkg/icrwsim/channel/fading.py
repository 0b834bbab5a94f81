"""Sum-of-sinusoids fading generators and per-link fading state."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np

from ..rng import RandomStreams
from .profiles import SpectrumKind, TapProfile

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Samples evaluated per block when a long trace is requested
_CHUNK = 1 << 15
SHADOWING_SINUSOIDS = 32


@dataclass(frozen=True)
class TapGenerator:
    """Stationary complex fading process of a single tap.

    A static tap evaluates to 1+0j. A half-bathtub tap is a normalized sum of
    complex exponentials whose frequencies follow the one-sided Jakes density.
    """
    kind: SpectrumKind
    doppler_hz: float
    frequencies: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phases: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def evaluate(self, t: ArrayLike) -> Union[complex, np.ndarray]:
        """Evaluate the tap at time(s) t in seconds."""
        times = np.asarray(t, dtype=float)
        if self.kind is SpectrumKind.STATIC:
            if times.ndim == 0:
                return 1.0 + 0.0j
            return np.ones(times.shape, dtype=complex)

        scale = 1.0 / math.sqrt(len(self.frequencies))
        omega = 2.0 * math.pi * self.frequencies
        if times.ndim == 0:
            return complex(np.exp(1j * (omega * float(times) + self.phases)).sum() * scale)

        flat = times.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for start in range(0, flat.size, _CHUNK):
            block = flat[start:start + _CHUNK]
            out[start:start + _CHUNK] = np.exp(1j * (np.outer(block, omega) + self.phases)).sum(axis=1) * scale
        return out.reshape(times.shape)


def synthesize_tap(kind: SpectrumKind, doppler_hz: float, n_sinusoids: int,
                   rng: np.random.Generator) -> TapGenerator:
    """Build a tap generator.

    Frequencies are f_D * cos(theta) with theta stratified-uniform on [0, pi/2],
    which samples the one-sided Jakes density on [0, f_D] (or [f_D, 0] when
    f_D < 0). Phases are uniform on [0, 2*pi).

    Args:
        kind: Spectrum kind of the tap
        doppler_hz: Signed maximum Doppler frequency
        n_sinusoids: Number of sinusoids of a half-bathtub tap
        rng: Random generator for frequencies and phases

    Returns:
        TapGenerator

    Raises:
        ValueError: For a half-bathtub tap with zero Doppler or no sinusoids
    """
    if kind is SpectrumKind.STATIC:
        return TapGenerator(kind=kind, doppler_hz=0.0)
    if doppler_hz == 0:
        raise ValueError("Half-bathtub tap requires a nonzero Doppler frequency")
    if n_sinusoids < 1:
        raise ValueError(f"Number of sinusoids must be >= 1, got {n_sinusoids}")

    strata = (np.arange(n_sinusoids) + rng.random(n_sinusoids)) / n_sinusoids
    theta = 0.5 * math.pi * strata
    frequencies = doppler_hz * np.cos(theta)
    phases = rng.uniform(0.0, 2.0 * math.pi, n_sinusoids)
    return TapGenerator(kind=kind, doppler_hz=doppler_hz, frequencies=frequencies, phases=phases)


@dataclass(frozen=True)
class Shadowing:
    """Log-normal shadowing spread per link class and its decorrelation time."""
    los_db: float = 3.0
    nlos_db: float = 4.0
    decorrelation_s: float = 1.0

    def __post_init__(self):
        if self.los_db < 0 or self.nlos_db < 0:
            raise ValueError(f"Shadowing spread must be >= 0, got {self.los_db}/{self.nlos_db} dB")
        if self.decorrelation_s <= 0:
            raise ValueError(f"Shadowing decorrelation time must be > 0, got {self.decorrelation_s}")

    def sigma_db(self, nlos: bool) -> float:
        return self.nlos_db if nlos else self.los_db


@dataclass(frozen=True)
class ShadowingProcess:
    """Zero-mean Gaussian process in dB with autocorrelation sigma^2 * exp(-|tau| / T).

    Sum of cosines whose frequencies are Cauchy distributed with scale
    1 / (2*pi*T), the spectrum of an exponential autocorrelation.
    """
    sigma_db: float
    frequencies: np.ndarray
    phases: np.ndarray

    def evaluate(self, t: ArrayLike) -> ArrayLike:
        times = np.asarray(t, dtype=float)
        if self.sigma_db == 0.0 or len(self.frequencies) == 0:
            return 0.0 if times.ndim == 0 else np.zeros(times.shape)
        scale = self.sigma_db * math.sqrt(2.0 / len(self.frequencies))
        omega = 2.0 * math.pi * self.frequencies
        if times.ndim == 0:
            return float(np.cos(omega * float(times) + self.phases).sum() * scale)
        flat = times.ravel()
        out = np.empty(flat.shape)
        for start in range(0, flat.size, _CHUNK):
            block = flat[start:start + _CHUNK]
            out[start:start + _CHUNK] = np.cos(np.outer(block, omega) + self.phases).sum(axis=1) * scale
        return out.reshape(times.shape)


def synthesize_shadowing(sigma_db: float, decorrelation_s: float, rng: np.random.Generator,
                         n_sinusoids: int = SHADOWING_SINUSOIDS) -> ShadowingProcess:
    """Draw one shadowing realization."""
    frequencies = rng.standard_cauchy(n_sinusoids) / (2.0 * math.pi * decorrelation_s)
    phases = rng.uniform(0.0, 2.0 * math.pi, n_sinusoids)
    return ShadowingProcess(sigma_db=sigma_db, frequencies=frequencies, phases=phases)


@dataclass(frozen=True)
class FadingLink:
    """Fading state of one unordered vehicle pair."""
    key: Tuple[int, int]
    profile: TapProfile
    taps: Tuple[TapGenerator, ...]
    created_at: float
    shadowing: Optional[ShadowingProcess] = None

    def tap_gains(self, t: ArrayLike) -> np.ndarray:
        """Complex tap coefficients h_i(t), one row per tap."""
        return np.stack([np.asarray(tap.evaluate(t), dtype=complex) for tap in self.taps])

    def power(self, t: ArrayLike) -> ArrayLike:
        """Aggregate narrowband power sum_i w_i |h_i(t)|^2."""
        weights = self.profile.weights
        gains = self.tap_gains(t)
        total = np.tensordot(weights, np.abs(gains) ** 2, axes=1)
        if np.ndim(total) == 0:
            return float(total)
        return total

    def shadowing_db(self, t: ArrayLike) -> ArrayLike:
        """Large-scale shadowing in dB; zero for a link built without it."""
        if self.shadowing is None:
            return 0.0 if np.ndim(t) == 0 else np.zeros(np.shape(t))
        return self.shadowing.evaluate(t)


def link_gain_db(link: FadingLink, t: ArrayLike) -> ArrayLike:
    """Small-scale gain of a link in dB at time(s) t."""
    gain = 10.0 * np.log10(link.power(t))
    if np.ndim(gain) == 0:
        return float(gain)
    return gain


def build_link(key: Tuple[int, int], profile: TapProfile, n_sinusoids: int,
               rng: np.random.Generator, created_at: float = 0.0,
               shadowing: Optional[Tuple[float, float]] = None) -> FadingLink:
    """Instantiate every tap of a profile for one link.

    `shadowing` is (sigma in dB, decorrelation time in s); its draws follow the
    tap draws, so the taps do not depend on whether shadowing is enabled.
    """
    taps = tuple(synthesize_tap(tap.kind, tap.doppler_hz, n_sinusoids, rng) for tap in profile.taps)
    process = None if shadowing is None else synthesize_shadowing(shadowing[0], shadowing[1], rng)
    return FadingLink(key=key, profile=profile, taps=taps, created_at=created_at, shadowing=process)


class LinkStore:
    """Lazily created fading links keyed by unordered vehicle pair.

    A link is re-drawn (new epoch) whenever its LOS/NLOS class flips. Each
    (pair, epoch) has its own random stream, so link realizations do not depend
    on the order in which links are first touched.
    """

    def __init__(self, streams: RandomStreams, los_profile: TapProfile, nlos_profile: TapProfile,
                 n_sinusoids: int = 64, shadowing: Shadowing = Shadowing()):
        """Initialize the store.

        Args:
            streams: Run random streams
            los_profile: Profile used for LOS links
            nlos_profile: Profile used for NLOS links
            n_sinusoids: Sinusoids per Rayleigh tap
            shadowing: Shadowing spread and decorrelation time of new links
        """
        self.shadowing = shadowing
        self.streams = streams
        self.los_profile = los_profile
        self.nlos_profile = nlos_profile
        self.n_sinusoids = n_sinusoids
        self._state: Dict[Tuple[int, int], Tuple[bool, int]] = {}
        self._links: Dict[Tuple[int, int], FadingLink] = {}

    @staticmethod
    def key(a: int, b: int) -> Tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def observe(self, a: int, b: int, nlos: bool) -> None:
        """Record the current LOS class of a pair, starting a new epoch on a flip."""
        key = self.key(a, b)
        state = self._state.get(key)
        if state is None:
            self._state[key] = (nlos, 0)
        elif state[0] != nlos:
            self._state[key] = (nlos, state[1] + 1)
            self._links.pop(key, None)
            logger.debug(f"Link {key} changed class, epoch {state[1] + 1}")

    def get(self, a: int, b: int, nlos: bool, t: float = 0.0) -> FadingLink:
        """Return the fading link of a pair for its current class."""
        self.observe(a, b, nlos)
        key = self.key(a, b)
        link = self._links.get(key)
        if link is None:
            epoch = self._state[key][1]
            profile = self.nlos_profile if nlos else self.los_profile
            rng = self.streams.fresh("fading", key[0], key[1], epoch)
            shadow = (self.shadowing.sigma_db(nlos), self.shadowing.decorrelation_s)
            link = build_link(key, profile, self.n_sinusoids, rng, created_at=t, shadowing=shadow)
            self._links[key] = link
        return link

    def forget(self, vehicle_id: int) -> None:
        """Drop every link that involves a vehicle (after it leaves the run)."""
        for key in [k for k in self._state if vehicle_id in k]:
            self._state.pop(key, None)
            self._links.pop(key, None)

    def __len__(self) -> int:
        return len(self._links)

    def epoch(self, a: int, b: int) -> Optional[int]:
        state = self._state.get(self.key(a, b))
        return None if state is None else state[1]
