#!/usr/bin/env python3

"""
Comparison matrix over platform modes and the merged flag.

Every cell of the matrix shares the start pose and the seed list. Trials
run as independent jobs; per-trial artifacts are written by the job itself,
trials.csv and summary.csv single-threaded afterwards in matrix order.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Callable, Iterator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from rotcam_slam.metrics.report import SummaryRow, TrialMetrics, evaluate_trial, summarize, write_summary_csv, \
    write_trials_csv
from rotcam_slam.trial import environment_for, run_trial
from rotcam_slam.utility.config import ExperimentConfig
from rotcam_slam.utility.logging_config import Subject, get_sim_logger

ProgressCallback = Callable[[TrialMetrics], None]


@dataclass(frozen=True)
class BatchResult:
    """Per-trial metrics in matrix order and one summary row per cell."""
    metrics: list[TrialMetrics]
    summary: list[SummaryRow]
    out_dir: Path | None = None


def matrix(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    """One config per (mode, merged) cell, modes outer, merged inner."""
    return [dataclasses.replace(cfg, mode=mode, merged=merged)
            for mode in cfg.batch.modes for merged in cfg.batch.merged]


def seeds(cfg: ExperimentConfig) -> list[int]:
    return [cfg.seed + i for i in range(cfg.trials)]


def _job(cell: ExperimentConfig, seed: int, out_dir: str | None) -> TrialMetrics:
    return evaluate_trial(run_trial(cell, seed, out_dir=out_dir))


def _run_jobs(jobs: list[tuple[ExperimentConfig, int]], out_dir: str | None,
              workers: int) -> Iterator[TrialMetrics]:
    if workers <= 1 or len(jobs) <= 1:
        for cell, seed in jobs:
            yield _job(cell, seed, out_dir)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_job, cell, seed, out_dir) for cell, seed in jobs]
        for future in futures:
            yield future.result()


def run_batch(cfg: ExperimentConfig, out_dir: str | Path | None = None, workers: int | None = None,
              progress: ProgressCallback | None = None) -> BatchResult:
    """
    Run every cell of the comparison matrix over the shared seed list.

    :param cfg: Base configuration; ``cfg.batch`` spans the matrix
    :param out_dir: Artifact directory; nothing is written when None
    :param workers: Parallel jobs (``cfg.workers`` by default)
    :param progress: Called with each trial's metrics, in matrix order
    :return: BatchResult; cells with fewer than ``cfg.trials`` successes are flagged
    """
    logger = get_sim_logger(Subject.HARNESS)
    # fail fast on a bad environment before spawning jobs
    environment_for(cfg)
    cells = matrix(cfg)
    jobs = [(cell, seed) for cell in cells for seed in seeds(cfg)]
    workers = cfg.workers if workers is None else workers
    target = str(out_dir) if out_dir is not None else None
    logger.info(f'Batch: {len(cells)} cells x {cfg.trials} trials on {workers} worker(s)')

    metrics: list[TrialMetrics] = []
    for result in _run_jobs(jobs, target, workers):
        metrics.append(result)
        if not result.succeeded:
            logger.warning(f'{result.label}#{result.seed} failed: {result.reason}')
        if progress is not None:
            progress(result)

    summary = summarize(metrics, [cell.label for cell in cells], cfg.trials)
    path = None
    if out_dir is not None:
        path = Path(out_dir)
        write_trials_csv(path / 'trials.csv', metrics)
        write_summary_csv(path / 'summary.csv', summary)
        logger.info(f'Wrote {path / "summary.csv"}')
    return BatchResult(metrics, summary, path)
