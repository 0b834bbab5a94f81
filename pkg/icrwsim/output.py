"""CSV and JSON-lines writers for run, sweep and validation outputs."""

import csv
import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .channel.diagnostics import BurstinessResult, CheckResult
from .engine import SimulationResult, SweepRow
from .messaging import PacketRecord
from .metrics import collisions_per_hour, mean_pace

logger = logging.getLogger(__name__)

RESULT_FILE = "result.csv"
TRIPS_FILE = "trips.csv"
PACKETS_FILE = "packets.csv"
EVENTS_FILE = "events.jsonl"
SUMMARY_FILE = "summary.csv"
REPORT_FILE = "validation_report.csv"
SPECTRA_FILE = "spectra.csv"


def fmt(value: Any) -> str:
    """Stable text form of a value for CSV cells."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".10g")
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    if value is None:
        return ""
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]], timestamp: bool) -> Path:
    with open(path, "w", newline="") as f:
        if timestamp:
            f.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    logger.debug(f"Wrote {path}")
    return path


def result_metrics(result: SimulationResult, time_improvement: Optional[float] = None,
                   burstiness: Optional[BurstinessResult] = None) -> List[Tuple[str, Any]]:
    """Metric rows of a run, followed by the configuration echo."""
    include = result.config.include_truncated
    truncated = sum(1 for t in result.trips if t.truncated)
    rows: List[Tuple[str, Any]] = [
        ("seed", result.seed),
        ("collisions", len(result.collisions)),
        ("collisions_per_hour", collisions_per_hour(result)),
        ("trips_completed", len(result.trips) - truncated),
        ("trips_truncated", truncated),
        ("trips_in_progress", len(result.in_progress)),
        ("mean_pace_s_per_km", mean_pace(result.trips, include)),
    ]
    if time_improvement is not None:
        rows.append(("time_improvement_per_km", time_improvement))
    rows += [
        ("packets_sent", result.packets_sent),
        ("packets_delivered", result.packets_delivered),
        ("delivery_ratio", result.packets_delivered / result.packets_sent if result.packets_sent else math.nan),
        ("warnings", result.warnings),
        ("alarms", result.alarms),
    ]
    if burstiness is not None:
        rows += [("loss_lag1_autocorrelation", burstiness.rho), ("loss_lag1_band_99", burstiness.band)]
    rows += [(f"config.{k}", v) for k, v in sorted(result.config_echo().items())]
    return rows


def write_result(out_dir: Path, result: SimulationResult, time_improvement: Optional[float] = None,
                 burstiness: Optional[BurstinessResult] = None, timestamp: bool = True) -> List[Path]:
    """Write result.csv, trips.csv and, when recorded, packets.csv and events.jsonl."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [write_csv(out_dir / RESULT_FILE, ["metric", "value"],
                         result_metrics(result, time_improvement, burstiness), timestamp)]
    trips = [(t.vehicle_id, t.start, t.distance, t.duration, t.truncated, False) for t in result.trips]
    trips += [(t.vehicle_id, t.start, t.distance, t.duration, False, True) for t in result.in_progress]
    written.append(write_csv(out_dir / TRIPS_FILE,
                             ["vehicle", "start_s", "distance_m", "duration_s", "truncated", "in_progress"],
                             trips, timestamp))
    if result.config.packet_log:
        written.append(write_packets(out_dir / PACKETS_FILE, result.packet_log, timestamp))
    if result.config.event_log:
        written.append(write_events(out_dir / EVENTS_FILE, result.events))
    return written


def write_packets(path: Path, records: Iterable[PacketRecord], timestamp: bool = True) -> Path:
    rows = ((r.time, r.tx, r.rx, r.distance, r.snr_db, r.delivered) for r in records)
    return write_csv(path, ["time", "tx", "rx", "distance", "snr_db", "delivered"], rows, timestamp)


def packet_rows(records: Iterable[PacketRecord]) -> List[Dict[str, Any]]:
    return [{"time": r.time, "tx": r.tx, "rx": r.rx, "delivered": r.delivered} for r in records]


def write_events(path: Path, events: Iterable[Dict[str, Any]]) -> Path:
    with open(path, "w") as f:
        for event in events:
            f.write(json.dumps(event, sort_keys=True) + "\n")
    return path


SUMMARY_HEADER = ["channel", "alarm_threshold", "warning_threshold", "seeds", "collisions_per_hour",
                  "collisions_per_hour_ci95", "time_improvement_per_km", "time_improvement_per_km_ci95",
                  "delivery_ratio"]


def summary_rows(rows: Iterable[SweepRow]) -> List[List[Any]]:
    return [[r.channel, r.alarm_threshold, r.warning_threshold, r.summary.seeds, r.summary.collisions_per_hour,
             r.summary.collisions_half_width, r.summary.time_improvement_per_km, r.summary.time_half_width,
             r.delivery_ratio] for r in rows]


def write_summary(path: Path, rows: Sequence[SweepRow], timestamp: bool = True) -> Path:
    return write_csv(path, SUMMARY_HEADER, summary_rows(rows), timestamp)


def write_report(path: Path, checks: Iterable[CheckResult], timestamp: bool = True) -> Path:
    rows = [[c.name, "" if c.tap is None else c.tap, c.value, c.limit, c.passed] for c in checks]
    return write_csv(path, ["check", "tap", "value", "limit", "passed"], rows, timestamp)


def write_spectra(path: Path, spectra: Dict[int, Tuple[np.ndarray, np.ndarray]], timestamp: bool = True) -> Path:
    rows = []
    for tap in sorted(spectra):
        freqs, psd = spectra[tap]
        rows.extend([tap, float(f), float(p)] for f, p in zip(freqs, psd))
    return write_csv(path, ["tap", "frequency_hz", "psd"], rows, timestamp)
