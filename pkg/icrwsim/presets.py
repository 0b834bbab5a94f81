"""Experiment presets and parsers for sweep axes."""

from typing import Dict, List, Tuple

from .channel.models import parse_channel
from .engine import NOAPP_LABEL

ALARM_GRID: Tuple[float, ...] = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
DEFAULT_SEEDS = "1-10"
FULL_SCALE_DURATION = 36000.0

# Reference channels (fixed PER, coverage distance) and emulated channels
FIGURE_CHANNELS: Dict[int, Tuple[str, ...]] = {
    3: (NOAPP_LABEL, "per:0.5", "per:0.8", "dmax:20", "dmax:60", "ideal"),
    4: (NOAPP_LABEL, "ideal", "emu:auto:100", "emu:auto:500"),
}


def parse_seeds(text: str) -> List[int]:
    """Parse seeds given as `a-b` ranges and single values separated by commas.

    Raises:
        ValueError: On malformed input, negative seeds or an empty result
    """
    seeds: List[int] = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        if "-" in part:
            low, high = (int(x) for x in part.split("-", 1))
            if high < low:
                raise ValueError(f"Empty seed range '{part}'")
            seeds.extend(range(low, high + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("No seeds given")
    if any(s < 0 for s in seeds):
        raise ValueError("Seeds must be non-negative")
    return list(dict.fromkeys(seeds))


def parse_thresholds(text: str) -> List[float]:
    """Parse a comma-separated list of alarm thresholds (all > 0)."""
    values = [float(p) for p in text.split(",") if p.strip()]
    if not values:
        raise ValueError("No alarm thresholds given")
    if any(v <= 0 for v in values):
        raise ValueError("Alarm thresholds must be > 0")
    return values


def parse_channels(text: str) -> List[str]:
    """Parse and normalize a comma-separated list of channel labels (`noapp` allowed)."""
    labels = []
    for part in (p.strip().lower() for p in text.split(",")):
        if not part:
            continue
        if part != NOAPP_LABEL:
            parse_channel(part)
        labels.append(part)
    if not labels:
        raise ValueError("No channels given")
    return labels
