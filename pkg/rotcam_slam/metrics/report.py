#!/usr/bin/env python3

"""
Per-trial metrics, batch aggregation and CSV output.

All CSV files are written with '\\n' line endings and floats formatted by
``format_float`` so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rotcam_slam.metrics.rates import (
    camera_rotation_per_meter,
    loops_per_meter,
    robot_rotation_per_meter,
    wheel_rotation_per_meter,
)
from rotcam_slam.metrics.record import ESTIMATE_COLUMNS, TRUTH_COLUMNS, TrialRecord
from rotcam_slam.metrics.series import bucket_series
from rotcam_slam.metrics.trajectory import associate, ate_rmse
from rotcam_slam.utility.exceptions import MetricError
from rotcam_slam.utility.logging_config import Subject, get_sim_logger
from rotcam_slam.utility.pure import format_float, mean_std

TRIAL_SERIES_COLUMNS = ('time', 'entropy_norm', 'path_len', 'wheel_rot', 'loops', 'ate', 'bac')

SUMMARY_METRICS = (
    'bac',
    'ate_rmse',
    'wheel_rotation_per_meter',
    'loops_per_meter',
    'robot_rotation_per_meter',
    'camera_rotation_per_meter',
    'path_length',
    'explored_area',
    'final_entropy_norm',
)


@dataclass(frozen=True)
class TrialMetrics:
    """Scalar results of one trial; None marks an undefined value."""
    label: str
    seed: int
    status: str
    reason: str
    complete: bool
    duration: float
    path_length: float
    loops: int
    bac: float | None
    ate_rmse: float | None
    wheel_rotation_per_meter: float | None
    loops_per_meter: float | None
    robot_rotation_per_meter: float | None
    camera_rotation_per_meter: float | None
    explored_area: float | None
    final_entropy_norm: float | None

    @property
    def succeeded(self) -> bool:
        return self.status == 'success'


@dataclass
class SummaryRow:
    """Mean and standard deviation per metric over the successful trials of one label."""
    label: str
    trials: int
    successes: int
    completed: int
    stats: dict[str, tuple[float, float]] = field(default_factory=dict)
    insufficient: bool = False


def _last(values: list, default=0.0):
    return values[-1] if values else default


def evaluate_trial(record: TrialRecord) -> TrialMetrics:
    """
    Reduce a TrialRecord to its scalar metrics.

    :param record: Completed trial record
    :return: TrialMetrics
    """
    path = _last(record.path_length)
    try:
        ate: float | None = ate_rmse(record.estimate_array()[:, :3], record.truth_array()[:, :3])
    except MetricError:
        ate = None
    maps = record.map_array()
    bac = float(maps[-1, 4]) if maps.shape[0] else None
    area = float(maps[-1, 3]) if maps.shape[0] else None
    entropy = float(maps[-1, 2]) if maps.shape[0] else None
    if bac is not None and math.isnan(bac):
        bac = None
    return TrialMetrics(
        label=record.label,
        seed=record.seed,
        status=record.status,
        reason=record.reason,
        complete=record.complete,
        duration=record.duration,
        path_length=path,
        loops=_last(record.loops, 0),
        bac=bac,
        ate_rmse=ate,
        wheel_rotation_per_meter=wheel_rotation_per_meter(_last(record.wheel_rotation), path),
        loops_per_meter=loops_per_meter(_last(record.loops, 0), path),
        robot_rotation_per_meter=robot_rotation_per_meter(_last(record.robot_rotation), path),
        camera_rotation_per_meter=camera_rotation_per_meter(_last(record.camera_rotation), path),
        explored_area=area,
        final_entropy_norm=entropy,
    )


def running_ate(record: TrialRecord) -> np.ndarray:
    """ATE RMSE over the steps up to each step; NaN until two pairs exist."""
    est = record.estimate_array()
    truth = record.truth_array()
    out = np.full(est.shape[0], np.nan)
    i, j = associate(est[:, 0], truth[:, 0])
    if i.size == 0:
        return out
    sq = np.sum((est[i, 1:3] - truth[j, 1:3]) ** 2, axis=1)
    count = np.arange(1, i.size + 1)
    rmse = np.sqrt(np.cumsum(sq) / count)
    rmse[count < 2] = np.nan
    out[i] = rmse
    # steps without a partner keep the previous value
    for k in range(1, out.size):
        if np.isnan(out[k]) and not np.isnan(out[k - 1]):
            out[k] = out[k - 1]
    return out


def trial_series(record: TrialRecord, window: float = 2.0) -> list[tuple[float, ...]]:
    """
    Bucketed per-trial series (time, entropy_norm, path_len, wheel_rot, loops, ate, bac).

    Step series are read at each map sample time and every column is
    bucketed into ``window`` second windows.
    """
    maps = record.map_array()
    if maps.shape[0] == 0 or not record.times:
        return []
    times = np.asarray(record.times)
    at = np.clip(np.searchsorted(times, maps[:, 0], side='right') - 1, 0, times.size - 1)
    ate = running_ate(record)
    columns = [
        maps[:, 2],
        np.asarray(record.path_length)[at],
        np.asarray(record.wheel_rotation)[at],
        np.asarray(record.loops, dtype=float)[at],
        ate[at],
        maps[:, 4],
    ]
    duration = max(record.duration, float(maps[-1, 0]))
    starts = None
    bucketed = []
    for column in columns:
        starts, values = bucket_series(maps[:, 0], column, window, duration)
        bucketed.append(values)
    return [(float(starts[k]), *(float(c[k]) for c in bucketed)) for k in range(len(starts))]


def _cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write rows with a header; floats via format_float, None as an empty field."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_trial_csv(path: str | Path, record: TrialRecord, window: float = 2.0) -> Path:
    return write_csv(path, TRIAL_SERIES_COLUMNS, trial_series(record, window))


def write_estimates_csv(path: str | Path, record: TrialRecord) -> Path:
    """Per-step estimate next to the ground truth."""
    header = list(ESTIMATE_COLUMNS) + [f'true_{c}' for c in TRUTH_COLUMNS[1:]]
    rows = [est + truth[1:] for est, truth in zip(record.estimates, record.truth)]
    return write_csv(path, header, rows)


TRIAL_TABLE_COLUMNS = ('label', 'seed', 'status', 'reason', 'complete', 'duration', 'path_length', 'loops') \
    + SUMMARY_METRICS[:6] + ('explored_area', 'final_entropy_norm')


def write_trials_csv(path: str | Path, metrics: Iterable[TrialMetrics]) -> Path:
    """One row per trial."""
    rows = [[getattr(m, c) for c in TRIAL_TABLE_COLUMNS] for m in metrics]
    return write_csv(path, TRIAL_TABLE_COLUMNS, rows)


def summarize(metrics: Iterable[TrialMetrics], labels: Sequence[str], n_trials: int) -> list[SummaryRow]:
    """
    Mean and std per label over successful trials only.

    Undefined values (None) are left out of their metric's statistics. A
    label with fewer than ``n_trials`` successes is flagged ``insufficient``.
    """
    logger = get_sim_logger(Subject.METRICS)
    metrics = list(metrics)
    rows = []
    for label in labels:
        group = [m for m in metrics if m.label == label]
        good = [m for m in group if m.succeeded]
        row = SummaryRow(label, len(group), len(good), sum(1 for m in good if m.complete))
        for name in SUMMARY_METRICS:
            values = [getattr(m, name) for m in good if getattr(m, name) is not None]
            row.stats[name] = mean_std(values)
        row.insufficient = len(good) < n_trials
        if row.insufficient:
            logger.warning(f'{label}: only {len(good)} of {n_trials} trials succeeded')
        rows.append(row)
    return rows


def summary_header() -> list[str]:
    header = ['label', 'trials', 'successes', 'completed', 'insufficient']
    for name in SUMMARY_METRICS:
        header += [f'{name}_mean', f'{name}_std']
    return header


def write_summary_csv(path: str | Path, rows: Iterable[SummaryRow]) -> Path:
    out = []
    for row in rows:
        line: list = [row.label, row.trials, row.successes, row.completed, row.insufficient]
        for name in SUMMARY_METRICS:
            line += list(row.stats.get(name, (math.nan, math.nan)))
        out.append(line)
    return write_csv(path, summary_header(), out)
