"""Statistical checks of generated fading traces and packet-loss logs."""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy import signal, special, stats

from ..rng import RandomStreams
from .fading import Shadowing, build_link
from .link import LinkBudget, LinkCurve, packet_error_probability
from .profiles import SpectrumKind, TapProfile

logger = logging.getLogger(__name__)

KS_ALPHA = 0.01
FORBIDDEN_MASS_LIMIT = 0.01
AUTOCORRELATION_RMS_LIMIT = 0.05
AUTOCORRELATION_MAX_LAG = 5e-3
POWER_RATIO_TOLERANCE_DB = 0.2
MEAN_POWER_TOLERANCE = 0.02
BURST_Z = 2.576
BURST_RATE_HZ = 10.0
# Link distance of the burstiness check; both put the mean SNR near the PER midpoint
BURST_DISTANCE_M = {"urban-los": 400.0, "urban-nlos": 100.0}


@dataclass
class CheckResult:
    """Outcome of one statistical check."""
    name: str
    tap: Optional[int]
    value: float
    limit: float
    passed: bool


@dataclass
class BurstinessResult:
    """Pooled lag-1 autocorrelation of loss indicators."""
    rho: float
    band: float
    samples: int
    loss_rate: float

    @property
    def significant(self) -> bool:
        return self.rho > self.band

    @property
    def within_band(self) -> bool:
        return abs(self.rho) <= self.band


def sampling_rate(profile: TapProfile) -> float:
    """Trace sampling rate, eight times the largest Doppler magnitude."""
    dopplers = [abs(tap.doppler_hz) for tap in profile.taps if tap.kind is SpectrumKind.HALF_BATHTUB]
    return 8.0 * max(dopplers) if dopplers else 1000.0


def jakes_autocorrelation(lags: np.ndarray, doppler_hz: float) -> np.ndarray:
    """Autocorrelation of a unit-power half-bathtub process.

    R(tau) = J0(x) + j*sign(f_D)*H0(|x|) with x = 2*pi*|f_D|*tau, where H0 is
    the Struve function of order zero.
    """
    x = 2.0 * math.pi * abs(doppler_hz) * np.asarray(lags, dtype=float)
    return special.j0(x) + 1j * math.copysign(1.0, doppler_hz) * special.struve(0, x)


def empirical_autocorrelation(trace: np.ndarray, max_lag: int) -> np.ndarray:
    """Time-average estimate of E[h(t + k) conj(h(t))] for k = 0..max_lag."""
    n = len(trace)
    out = np.empty(max_lag + 1, dtype=complex)
    for k in range(max_lag + 1):
        out[k] = np.vdot(trace[:n - k], trace[k:]) / (n - k)
    return out


def rayleigh_ks(envelope: np.ndarray, max_samples: int = 5000) -> Tuple[float, float]:
    """KS test of an envelope against Rayleigh with sigma^2 = 1/2.

    The trace is thinned to at most `max_samples` evenly spaced samples, since
    the test assumes independent observations.

    Returns:
        (statistic, p-value)
    """
    stride = max(1, len(envelope) // max_samples)
    thinned = envelope[::stride]
    result = stats.kstest(thinned, "rayleigh", args=(0.0, 1.0 / math.sqrt(2.0)))
    return float(result.statistic), float(result.pvalue)


def forbidden_side_mass(trace: np.ndarray, fs: float, doppler_hz: float,
                        nperseg: int = 4096) -> Tuple[float, np.ndarray, np.ndarray]:
    """Fraction of Welch power on the side of the spectrum a half-bathtub tap must leave empty.

    Returns:
        (mass fraction, frequencies, two-sided power spectral density)
    """
    freqs, psd = signal.welch(trace, fs=fs, nperseg=min(nperseg, len(trace)), return_onesided=False,
                              detrend=False)
    order = np.argsort(freqs)
    freqs, psd = freqs[order], psd[order]
    forbidden = freqs < 0 if doppler_hz > 0 else freqs > 0
    total = psd.sum()
    return float(psd[forbidden].sum() / total), freqs, psd


def loss_burstiness(indicators: Iterable[np.ndarray]) -> BurstinessResult:
    """Pooled lag-1 autocorrelation of per-link loss indicator sequences.

    Each sequence is centered on its own mean; numerators and denominators are
    pooled across links. Under independent losses the statistic lies within
    +-2.576/sqrt(n) with 99% probability.
    """
    numerator = 0.0
    denominator = 0.0
    pairs = 0
    losses = 0.0
    count = 0
    for sequence in indicators:
        x = np.asarray(sequence, dtype=float)
        if len(x) < 2:
            continue
        losses += x.sum()
        count += len(x)
        centered = x - x.mean()
        numerator += float(np.dot(centered[:-1], centered[1:]))
        denominator += float(np.dot(centered, centered))
        pairs += len(x) - 1
    rho = numerator / denominator if denominator > 0 else 0.0
    band = BURST_Z / math.sqrt(pairs) if pairs else math.inf
    return BurstinessResult(rho=rho, band=band, samples=pairs, loss_rate=losses / count if count else 0.0)


def burstiness_from_packets(rows: Iterable[Dict[str, object]]) -> BurstinessResult:
    """Loss burstiness computed per directed link from packet-log rows (time, tx, rx, delivered)."""
    links: Dict[Tuple[int, int], List[Tuple[float, float]]] = {}
    for row in rows:
        key = (int(row["tx"]), int(row["rx"]))
        links.setdefault(key, []).append((float(row["time"]), 0.0 if row["delivered"] else 1.0))
    sequences = []
    for key in sorted(links):
        samples = sorted(links[key])
        sequences.append(np.array([lost for _, lost in samples]))
    return loss_burstiness(sequences)


def fixed_distance_losses(profile: TapProfile, streams: RandomStreams, distance: float = 100.0,
                          duration: float = 3600.0, rate: float = BURST_RATE_HZ, packet_bytes: int = 100,
                          budget: LinkBudget = LinkBudget(), curve: LinkCurve = LinkCurve(), nlos: bool = True,
                          n_sinusoids: int = 64, shadowing: Shadowing = Shadowing()) -> Tuple[np.ndarray, np.ndarray]:
    """Loss indicators of an emulated link held at a fixed distance and sampled at `rate`.

    Returns:
        (emulated loss indicators, i.i.d. loss indicators with the same mean loss rate)
    """
    t = np.arange(int(round(duration * rate))) / rate
    link = build_link((0, 1), profile, n_sinusoids, streams.fresh("diagnostics", 0),
                      shadowing=(shadowing.sigma_db(nlos), shadowing.decorrelation_s))
    gain = 10.0 * np.log10(link.power(t)) + link.shadowing_db(t)
    snr = budget.snr_db(distance, gain, nlos)
    per = packet_error_probability(snr, packet_bytes, curve)
    draws = streams.fresh("diagnostics", 1).random(len(t))
    emulated = (draws < per).astype(float)
    iid = (streams.fresh("diagnostics", 2).random(len(t)) < emulated.mean()).astype(float)
    return emulated, iid


def validate_profile(profile: TapProfile, samples: int = 1_000_000, seed: int = 1,
                     n_sinusoids: int = 64) -> Tuple[List[CheckResult], Dict[int, Tuple[np.ndarray, np.ndarray]]]:
    """Run the fading checks on every tap of a profile.

    Checks per half-bathtub tap: Rayleigh KS, forbidden-side spectral mass,
    autocorrelation against the one-sided Jakes reference, mean power and
    power ratio to the static tap. The report closes with the lag-1 loss
    autocorrelation of a 10 Hz link held at a fixed urban distance (100 m for
    NLOS), which must be significantly positive, and of an i.i.d. control with
    the same loss rate, which must stay within the 99% band.

    Returns:
        (check results, spectra keyed by tap number as (frequencies, psd))
    """
    streams = RandomStreams(seed)
    fs = sampling_rate(profile)
    t = np.arange(samples) / fs
    link = build_link((0, 1), profile, n_sinusoids, streams.fresh("validation", 0))
    weights = profile.weights
    max_lag = int(round(AUTOCORRELATION_MAX_LAG * fs))

    results: List[CheckResult] = []
    spectra: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
    for index, (tap, generator) in enumerate(zip(profile.taps, link.taps), start=1):
        trace = np.asarray(generator.evaluate(t), dtype=complex)
        power = np.abs(trace) ** 2
        if tap.kind is SpectrumKind.STATIC:
            deviation = float(np.max(np.abs(np.abs(trace) - 1.0)))
            results.append(CheckResult("static_amplitude", index, deviation, 1e-12, deviation <= 1e-12))
            continue

        logger.info(f"{profile.name} tap {index}: {len(trace)} samples at {fs:.0f} Hz")
        _, pvalue = rayleigh_ks(np.abs(trace))
        results.append(CheckResult("rayleigh_ks_pvalue", index, pvalue, KS_ALPHA, pvalue >= KS_ALPHA))

        mass, freqs, psd = forbidden_side_mass(trace, fs, tap.doppler_hz)
        spectra[index] = (freqs, psd)
        results.append(CheckResult("forbidden_side_mass", index, mass, FORBIDDEN_MASS_LIMIT,
                                   mass < FORBIDDEN_MASS_LIMIT))

        lags = np.arange(max_lag + 1) / fs
        error = empirical_autocorrelation(trace, max_lag) - jakes_autocorrelation(lags, tap.doppler_hz)
        rms = float(np.sqrt(np.mean(np.abs(error) ** 2)))
        results.append(CheckResult("autocorrelation_rms", index, rms, AUTOCORRELATION_RMS_LIMIT,
                                   rms <= AUTOCORRELATION_RMS_LIMIT))

        mean_power = float(power.mean())
        results.append(CheckResult("mean_power", index, mean_power, MEAN_POWER_TOLERANCE,
                                   abs(mean_power - 1.0) <= MEAN_POWER_TOLERANCE))

        ratio_db = 10.0 * math.log10(weights[index - 1] * mean_power / weights[0])
        offset = ratio_db - (tap.power_db - profile.taps[0].power_db)
        results.append(CheckResult("power_ratio_offset_db", index, offset, POWER_RATIO_TOLERANCE_DB,
                                   abs(offset) <= POWER_RATIO_TOLERANCE_DB))

    aggregate = float(np.mean(link.power(t)))
    results.append(CheckResult("aggregate_power", None, aggregate, MEAN_POWER_TOLERANCE,
                               abs(aggregate - 1.0) <= MEAN_POWER_TOLERANCE))

    nlos = profile.name.endswith("nlos")
    distance = BURST_DISTANCE_M.get(profile.name, 100.0)
    logger.info(f"{profile.name}: loss burstiness at {distance:.0f} m, {BURST_RATE_HZ:.0f} Hz")
    emulated, iid = fixed_distance_losses(profile, streams, distance, nlos=nlos, n_sinusoids=n_sinusoids)
    bursts = loss_burstiness([emulated])
    control = loss_burstiness([iid])
    results.append(CheckResult("emulated_loss_lag1", None, bursts.rho, bursts.band, bursts.significant))
    results.append(CheckResult("iid_loss_lag1", None, control.rho, control.band, control.within_band))
    return results, spectra
