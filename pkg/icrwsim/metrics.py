"""Safety and efficiency metrics with confidence intervals over seeds."""

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .scenario import BehaviorMode

if TYPE_CHECKING:
    from .engine import SimulationResult
    from .mobility import TripSample


@dataclass(frozen=True)
class MetricSummary:
    """Mean metrics of one sweep cell and their 95% half-widths (nan for a single seed)."""
    collisions_per_hour: float
    time_improvement_per_km: float
    collisions_half_width: float = math.nan
    time_half_width: float = math.nan
    seeds: int = 1


def collisions_per_hour(result: "SimulationResult") -> float:
    """Collision events per simulated hour.

    Raises:
        ValueError: If the run has no duration
    """
    hours = result.config.sim_duration / 3600.0
    if hours <= 0:
        raise ValueError("Simulation duration must be > 0")
    return len(result.collisions) / hours


def mean_pace(trips: Iterable["TripSample"], include_truncated: bool = False) -> float:
    """Mean per-trip travel time per kilometer in s/km; nan without usable trips."""
    paces = [trip.duration / (trip.distance / 1000.0) for trip in trips
             if trip.distance > 0 and (include_truncated or not trip.truncated)]
    return float(np.mean(paces)) if paces else math.nan


def time_improvement_per_km(result: "SimulationResult", baseline: "SimulationResult",
                            include_truncated: Optional[bool] = None) -> float:
    """Seconds per kilometer saved with respect to the careful baseline.

    Positive values mean the evaluated run is faster than the baseline.

    Raises:
        ValueError: If the baseline did not run with careful drivers
    """
    if baseline.config.behavior_mode is not BehaviorMode.CAREFUL:
        raise ValueError(f"Baseline must run in careful mode, got {baseline.config.behavior_mode.value}")
    if include_truncated is None:
        include_truncated = result.config.include_truncated
    return mean_pace(baseline.trips, include_truncated) - mean_pace(result.trips, include_truncated)


def mean_and_half_width(values: Sequence[float], confidence: float = 0.95) -> Tuple[float, float]:
    """Sample mean and Student-t confidence half-width; the half-width is nan below two values."""
    data = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if len(data) == 0:
        return math.nan, math.nan
    mean = float(data.mean())
    if len(data) < 2:
        return mean, math.nan
    quantile = stats.t.ppf(0.5 + confidence / 2.0, len(data) - 1)
    return mean, float(quantile * data.std(ddof=1) / math.sqrt(len(data)))
