"""Aggregation of batch results into plot-ready detection and cost data.

Emits the CSV surfaces for the four experiment families: per-slot traces,
detection-time CDFs, threshold ROC points, and average-cost sweeps.  A
false alarm (first detection naming an honest sensor) removes that
realization from both the delay average and the CDF.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .sim import ExperimentResult, SimConfig, run_batch


@dataclass
class DetectionStats:
    """First-detection outcomes over a batch.

    ``detection_times[r]`` is the slot of realization r's first correct
    detection, or None if it false-alarmed or never detected.  The three
    outcome counts partition the batch.
    """

    detection_times: list[int | None]
    false_alarms: int
    undetected: int

    @classmethod
    def from_results(cls, results: list[ExperimentResult]) -> DetectionStats:
        times: list[int | None] = []
        false_alarms = 0
        undetected = 0
        for res in results:
            if res.first_detection is None:
                times.append(None)
                undetected += 1
            elif res.false_alarm:
                times.append(None)
                false_alarms += 1
            else:
                times.append(res.first_detection[0])
        return cls(detection_times=times, false_alarms=false_alarms, undetected=undetected)

    @property
    def realizations(self) -> int:
        return len(self.detection_times)


@dataclass
class RocPoint:
    """Detection delay vs. false-alarm trade-off at one threshold.

    ``mean_delay`` averages first correct detections only (false alarms
    excluded); NaN when nothing was detected correctly.
    """

    threshold: float
    mean_delay: float
    false_alarm_rate: float


def detection_cdf(stats: DetectionStats, horizon: int) -> list[tuple[int, float]]:
    """Cumulative fraction of correct detections by each slot.

    False-alarm realizations are excluded from numerator and denominator;
    the terminal value is the correctly-detected fraction.
    """
    if stats.realizations == 0:
        raise ValueError("detection stats are empty")
    eligible = stats.realizations - stats.false_alarms
    counts = np.zeros(horizon)
    for t in stats.detection_times:
        if t is not None:
            if t >= horizon:
                raise ValueError(f"detection time {t} beyond horizon {horizon}")
            counts[t] += 1
    cum = np.cumsum(counts)
    if eligible > 0:
        cum = cum / eligible
    return [(t, float(cum[t])) for t in range(horizon)]


def roc_sweep(
    cfg: SimConfig,
    thresholds: list[float],
    realizations: int,
    seed_base: int | None = None,
) -> list[RocPoint]:
    """One batch per threshold, seeds shared across thresholds for pairing."""
    for th in thresholds:
        if not 0.0 < th < 1.0:
            raise ValueError(f"thresholds must be in (0, 1), got {th}")
    if seed_base is None:
        seed_base = cfg.seed
    points = []
    for th in thresholds:
        results = run_batch(replace(cfg, detection_threshold=th), realizations, seed_base=seed_base)
        stats = DetectionStats.from_results(results)
        correct = [t for t in stats.detection_times if t is not None]
        mean_delay = float(np.mean(correct)) if correct else float("nan")
        points.append(
            RocPoint(
                threshold=th,
                mean_delay=mean_delay,
                false_alarm_rate=stats.false_alarms / stats.realizations,
            )
        )
    return points


def average_cost(results: list[ExperimentResult]) -> float:
    """Mean over realizations of per-slot average cost."""
    if not results:
        raise ValueError("cannot average an empty batch")
    return float(np.mean([res.total_cost / len(res.records) for res in results]))


# ---------------------------------------------------------------------------
# CSV emission.  Every file starts with comment lines carrying the resolved
# configuration, so any output can be re-run exactly.


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _header_lines(metadata: dict) -> list[str]:
    blob = json.dumps(metadata, sort_keys=True, separators=(",", ":"))
    return ["# trustgrid experiment", f"# config: {blob}"]


def _write_csv(path: str | Path, metadata: dict, columns: list[str], rows) -> None:
    lines = _header_lines(metadata)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_trace_csv(path: str | Path, result: ExperimentResult, metadata: dict) -> None:
    """One row per slot: t, pi_1..pi_N, cost, state_norm, attacked."""
    n = len(result.records[0].pi)
    columns = ["t"] + [f"pi_{i + 1}" for i in range(n)] + ["cost", "state_norm", "attacked"]
    rows = (
        [rec.t, *rec.pi, rec.cost, rec.state_norm, rec.attacked] for rec in result.records
    )
    _write_csv(path, metadata, columns, rows)


def write_cdf_csv(
    path: str | Path,
    curves: list[tuple[float, list[tuple[int, float]]]],
    metadata: dict,
) -> None:
    """One row per (slot, fraction), prefixed by the curve's attack frequency."""
    rows = (
        [freq, slot, frac] for freq, curve in curves for slot, frac in curve
    )
    _write_csv(path, metadata, ["frequency", "slot", "fraction"], rows)


def write_roc_csv(path: str | Path, points: list[RocPoint], metadata: dict) -> None:
    """One row per threshold."""
    rows = ([p.threshold, p.mean_delay, p.false_alarm_rate] for p in points)
    _write_csv(path, metadata, ["threshold", "mean_delay", "false_alarm_rate"], rows)


def write_cost_csv(
    path: str | Path,
    sweep_name: str,
    rows: list[tuple[float, float, float]],
    metadata: dict,
) -> None:
    """One row per sweep point: parameter value, weighted cost, full-trust cost."""
    _write_csv(path, metadata, [sweep_name, "cost_weighted", "cost_full_trust"], rows)
