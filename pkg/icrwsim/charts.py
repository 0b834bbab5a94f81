"""SVG line charts of sweep results, each written next to its CSV data."""

import logging
import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib
from matplotlib.figure import Figure

from .engine import SweepRow
from .output import write_csv

logger = logging.getLogger(__name__)

CHARTS = {
    "collisions": ("collisions_vs_alarm_threshold", "Average collisions per hour", "collisions/h"),
    "time": ("time_improvement_vs_alarm_threshold", "Time improvement to careful case", "s/km"),
}


def _series(rows: Sequence[SweepRow], metric: str) -> Dict[str, List[Tuple[float, float, float]]]:
    series: Dict[str, List[Tuple[float, float, float]]] = {}
    for row in rows:
        if metric == "collisions":
            point = (row.alarm_threshold, row.summary.collisions_per_hour, row.summary.collisions_half_width)
        else:
            point = (row.alarm_threshold, row.summary.time_improvement_per_km, row.summary.time_half_width)
        series.setdefault(row.channel, []).append(point)
    return series


def plot_metric(rows: Sequence[SweepRow], metric: str, out_dir: Path, timestamp: bool = True) -> List[Path]:
    """Draw one metric against the alarm threshold, one line per channel.

    Returns:
        Paths of the SVG chart and its CSV data
    """
    stem, title, ylabel = CHARTS[metric]
    series = _series(rows, metric)

    data = [(label, x, y, hw) for label, points in series.items() for x, y, hw in points]
    csv_path = write_csv(out_dir / f"{stem}.csv", ["channel", "alarm_threshold", "value", "ci95"], data, timestamp)

    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.add_subplot()
    for label, points in series.items():
        points = sorted(points)
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        errors = [0.0 if math.isnan(p[2]) else p[2] for p in points]
        ax.errorbar(xs, ys, yerr=errors, marker="o", capsize=3, label=label)
    ax.set_xlabel("Alarm threshold [s]")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()

    svg_path = out_dir / f"{stem}.svg"
    with matplotlib.rc_context({"svg.hashsalt": "icrwsim", "svg.fonttype": "none"}):
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
    logger.info(f"Chart written to {svg_path}")
    return [svg_path, csv_path]


def plot_sweep(rows: Sequence[SweepRow], out_dir: Path, timestamp: bool = True) -> List[Path]:
    """Write both sweep charts (collisions and time improvement)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    return plot_metric(rows, "collisions", out_dir, timestamp) + plot_metric(rows, "time", out_dir, timestamp)
