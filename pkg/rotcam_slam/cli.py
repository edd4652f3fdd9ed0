#!/usr/bin/env python3

"""
Typer-based CLI for rotcam_slam.

Commands: ``run`` (one trial), ``batch`` (comparison matrix), ``map-export``
(PGM snapshots of a trial) and ``validate-env``.
"""

from __future__ import annotations

import logging
import traceback
from collections.abc import Iterator
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Annotated, Any

import numpy as np
import typer

from rotcam_slam import batch as batch_runner
from rotcam_slam.metrics.report import SUMMARY_METRICS, SummaryRow, TrialMetrics, evaluate_trial
from rotcam_slam.slam.export import write_labels_pgm, write_occupancy_pgm, write_pgm
from rotcam_slam.slam.occupancy import OccupancyGrid
from rotcam_slam.trial import Trial, resolve_environment_path, trial_directory
from rotcam_slam.utility import validation
from rotcam_slam.utility.config import ExperimentConfig, load_config
from rotcam_slam.utility.console import get_output_manager, init_output_manager
from rotcam_slam.utility.exceptions import EnvironmentFileError, RotcamError, TrialFailedError
from rotcam_slam.utility.logging_config import init_logging
from rotcam_slam.world.environment import load_environment


class OutputFormat(str, Enum):
    """Output format options."""

    interactive = "interactive"
    ci = "ci"
    json = "json"
    quiet = "quiet"


class Mode(str, Enum):
    """Platform modes."""

    A = "A"
    HH = "HH"
    OC = "OC"
    Y0 = "Y0"


app = typer.Typer(
    name="rotcam_slam",
    help="Active V-SLAM simulator for an omnidirectional robot with an independently rotating camera.",
    add_completion=True,
    rich_markup_mode="rich",
    no_args_is_help=True,
)

# === Shared options ===

ConfigFile = Annotated[
    str | None,
    typer.Option("--config", "-c", help="Path to a YAML experiment file", rich_help_panel="Configuration"),
]
Overrides = Annotated[
    list[str] | None,
    typer.Option("--set", "-s", help="Override a config value, e.g. --set kin.D=0.14 (repeatable)",
                 rich_help_panel="Configuration"),
]
EnvPath = Annotated[
    str | None,
    typer.Option("--env", "-e", help="Environment file or bundled name (office, cafe, room)",
                 rich_help_panel="Configuration"),
]
LogFile = Annotated[
    str | None,
    typer.Option("--log-file", "-l", help="File path for creating an additional log file",
                 rich_help_panel="Configuration"),
]
JsonLog = Annotated[
    bool,
    typer.Option("--json-log", "-jl", help="Use JSON format for log file output (structured logging)",
                 rich_help_panel="Configuration"),
]
ModeOption = Annotated[
    Mode | None,
    typer.Option("--mode", help="Platform mode", rich_help_panel="Experiment"),
]
Merged = Annotated[
    bool | None,
    typer.Option("--merged/--no-merged", help="Compose the camera estimate into the pose (NC variant when off)",
                 rich_help_panel="Experiment", show_default=False),
]
Seed = Annotated[
    int | None,
    typer.Option("--seed", help="Noise seed (first seed of a batch)", rich_help_panel="Experiment"),
]
Duration = Annotated[
    float | None,
    typer.Option("--duration", "-d", help="Trial duration in seconds", rich_help_panel="Experiment"),
]
OutDir = Annotated[
    str | None,
    typer.Option("--out-dir", "-o", help="Directory for CSV, PGM and g2o artifacts", rich_help_panel="Experiment"),
]
Verbose = Annotated[
    int,
    typer.Option("--verbose", "-v", count=True, help="Enable verbose output (-v) or debug output (-vv)",
                 rich_help_panel="Output"),
]
Mute = Annotated[
    bool,
    typer.Option("--mute", "-m", help="Mute console output", rich_help_panel="Output"),
]
Quiet = Annotated[
    bool,
    typer.Option("--quiet", "-q", help="Suppress all output except errors (shorthand for --output=quiet)",
                 rich_help_panel="Output"),
]
Output = Annotated[
    OutputFormat,
    typer.Option("--output", help="Output format", rich_help_panel="Output"),
]


def _setup_output(verbose: int, mute: bool, quiet: bool, output: OutputFormat, log_file: str | None,
                  json_log: bool) -> None:
    output_format = "quiet" if quiet else output.value
    init_output_manager(format=output_format, verbose=verbose, mute=mute or quiet)
    init_logging(verbose=verbose, mute=mute or quiet, log_file=log_file, json_logging=json_log)


@contextmanager
def _errors(verbose: int) -> Iterator[None]:
    """Print RotcamError through the output manager and exit with its code."""
    try:
        yield
    except RotcamError as e:
        message = f'[{e.code}] {e}' if isinstance(e, EnvironmentFileError) else str(e)
        get_output_manager().error(message, e)
        if verbose >= 2:
            logging.getLogger('rotcam_slam').debug(traceback.format_exc())
        raise typer.Exit(e.exit_code) from e
    except Exception:
        if verbose >= 2:
            logging.getLogger('rotcam_slam').error(traceback.format_exc())
        raise


def experiment_config(config_file: str | None, overrides: list[str] | None, **flags: Any) -> ExperimentConfig:
    """
    Resolve, validate and type the experiment configuration.

    Flags map dotted config keys to CLI values; None means not given.
    """
    data = load_config(config_file, overrides, flags)
    validation.check(data)
    return ExperimentConfig.from_dict(data)


def _flags(env: str | None, mode: Mode | None, merged: bool | None, seed: int | None,
           duration: float | None, out_dir: str | None) -> dict[str, Any]:
    return {
        'env.path': env,
        'mode': mode.value if mode is not None else None,
        'merged': merged,
        'seed': seed,
        'duration': duration,
        'out_dir': out_dir,
    }


def _fmt(value: Any) -> str:
    if value is None:
        return '-'
    if isinstance(value, float):
        return f'{value:.4g}'
    return str(value)


def _trial_rows(m: TrialMetrics) -> list[list[str]]:
    return [
        ['status', m.status + (f' ({m.reason})' if m.reason else '')],
        ['complete', _fmt(m.complete)],
        ['duration [s]', _fmt(m.duration)],
        ['path length [m]', _fmt(m.path_length)],
        ['loop closures', _fmt(m.loops)],
        *[[name, _fmt(getattr(m, name))] for name in SUMMARY_METRICS if name != 'path_length'],
    ]


def _summary_rows(rows: list[SummaryRow]) -> tuple[list[str], list[list[str]]]:
    shown = ('bac', 'ate_rmse', 'wheel_rotation_per_meter', 'loops_per_meter', 'path_length')
    header = ['label', 'ok/n'] + list(shown)
    table = []
    for row in rows:
        line = [row.label + (' *' if row.insufficient else ''), f'{row.successes}/{row.trials}']
        for name in shown:
            mean, std = row.stats.get(name, (float('nan'), float('nan')))
            line.append(f'{mean:.4g} ± {std:.2g}')
        table.append(line)
    return header, table


@app.command()
def run(
    config_file: ConfigFile = None,
    overrides: Overrides = None,
    env: EnvPath = None,
    mode: ModeOption = None,
    merged: Merged = None,
    seed: Seed = None,
    duration: Duration = None,
    out_dir: OutDir = None,
    log_file: LogFile = None,
    json_log: JsonLog = False,
    verbose: Verbose = 0,
    mute: Mute = False,
    quiet: Quiet = False,
    output: Output = OutputFormat.interactive,
) -> None:
    """
    Run a single trial.

    Examples:
        rotcam_slam run --mode HH --seed 3 --duration 120
        rotcam_slam run -c experiment.yaml --no-merged -o results
    """
    _setup_output(verbose, mute, quiet, output, log_file, json_log)
    with _errors(verbose):
        cfg = experiment_config(config_file, overrides, **_flags(env, mode, merged, seed, duration, out_dir))
        om = get_output_manager()
        om.step(f'Running trial {cfg.label}#{cfg.seed}', 'trial')
        trial = Trial(cfg, cfg.seed)
        record = trial.run()
        target = trial.write(trial_directory(cfg.out_dir, cfg.label, cfg.seed))
        metrics = evaluate_trial(record)
        om.summary_table(f'Trial {cfg.label}#{cfg.seed}', ['metric', 'value'], _trial_rows(metrics))
        if not record.succeeded:
            raise TrialFailedError(f'Trial {cfg.label}#{cfg.seed} failed: {record.reason}')
        om.success('Trial finished', steps=record.steps, loops=metrics.loops,
                   artifacts=str(target))


@app.command()
def batch(
    config_file: ConfigFile = None,
    overrides: Overrides = None,
    env: EnvPath = None,
    seed: Seed = None,
    trials: Annotated[
        int | None,
        typer.Option("--trials", "-n", help="Trials per matrix cell", rich_help_panel="Experiment"),
    ] = None,
    duration: Duration = None,
    out_dir: OutDir = None,
    workers: Annotated[
        int | None,
        typer.Option("--workers", "-w", help="Trials run in parallel", rich_help_panel="Execution"),
    ] = None,
    log_file: LogFile = None,
    json_log: JsonLog = False,
    verbose: Verbose = 0,
    mute: Mute = False,
    quiet: Quiet = False,
    output: Output = OutputFormat.interactive,
) -> None:
    """
    Run the comparison matrix (modes x merged) over a shared seed list.

    Examples:
        rotcam_slam batch --trials 10 --duration 600 --workers 4 -o results
        rotcam_slam batch -c experiment.yaml --set batch.modes=[A,HH]
    """
    _setup_output(verbose, mute, quiet, output, log_file, json_log)
    with _errors(verbose):
        flags = _flags(env, None, None, seed, duration, out_dir)
        flags.update({'trials': trials, 'workers': workers})
        cfg = experiment_config(config_file, overrides, **flags)
        om = get_output_manager()
        cells = len(cfg.batch.modes) * len(cfg.batch.merged)
        om.step(f'Batch of {cells} cells x {cfg.trials} trials', 'batch')
        with om.batch_progress(cells * cfg.trials, 'Trials') as advance:
            result = batch_runner.run_batch(
                cfg, cfg.out_dir, cfg.workers,
                progress=lambda m: advance(f'{m.label}#{m.seed} {m.status}'),
            )
        header, rows = _summary_rows(result.summary)
        om.summary_table('Summary (mean ± std over successful trials, * = insufficient)', header, rows)
        short = [r.label for r in result.summary if r.insufficient]
        if short:
            om.warning(f'Cells with fewer than {cfg.trials} successful trials: {", ".join(short)}')
        om.success('Batch finished', trials=len(result.metrics), out_dir=str(result.out_dir))


@app.command("map-export")
def map_export(
    config_file: ConfigFile = None,
    overrides: Overrides = None,
    env: EnvPath = None,
    mode: ModeOption = None,
    merged: Merged = None,
    seed: Seed = None,
    duration: Duration = None,
    out_dir: OutDir = None,
    every: Annotated[
        float,
        typer.Option("--every", help="Seconds between map snapshots", rich_help_panel="Experiment"),
    ] = 10.0,
    log_file: LogFile = None,
    json_log: JsonLog = False,
    verbose: Verbose = 0,
    mute: Mute = False,
    quiet: Quiet = False,
    output: Output = OutputFormat.interactive,
) -> None:
    """
    Run a trial and export PGM snapshots of the map while it grows.

    Writes the environment, the ground-truth labels, map_<time>.pgm every
    --every seconds and the final map.

    Examples:
        rotcam_slam map-export --mode OC --duration 60 --every 5 -o maps
    """
    _setup_output(verbose, mute, quiet, output, log_file, json_log)
    with _errors(verbose):
        cfg = experiment_config(config_file, overrides, **_flags(env, mode, merged, seed, duration, out_dir))
        om = get_output_manager()
        target = trial_directory(cfg.out_dir, cfg.label, cfg.seed) / 'maps'
        target.mkdir(parents=True, exist_ok=True)
        om.step(f'Exporting maps of {cfg.label}#{cfg.seed} to {target}', 'trial')
        trial = Trial(cfg, cfg.seed)
        write_occupancy_pgm(target / 'environment.pgm', trial.env.occupied)
        write_labels_pgm(target / 'map_gt.pgm', trial.gt_labels)
        written: list[Path] = []
        next_snapshot = 0.0

        def snapshot(time: float, grid: OccupancyGrid) -> None:
            nonlocal next_snapshot
            if time + 1e-9 < next_snapshot:
                return
            written.append(write_pgm(target / f'map_{time:07.1f}.pgm', grid, cfg.slam.free_threshold,
                                     cfg.slam.occupied_threshold))
            next_snapshot = time + every

        record = trial.run(on_map_sample=snapshot)
        write_pgm(target / 'map.pgm', trial.grid, cfg.slam.free_threshold, cfg.slam.occupied_threshold)
        om.success('Maps exported', snapshots=len(written), status=record.status)


@app.command("validate-env")
def validate_env(
    path: Annotated[
        str | None,
        typer.Argument(help="Environment file or bundled name; the configured one by default"),
    ] = None,
    config_file: ConfigFile = None,
    overrides: Overrides = None,
    log_file: LogFile = None,
    json_log: JsonLog = False,
    verbose: Verbose = 0,
    mute: Mute = False,
    quiet: Quiet = False,
    output: Output = OutputFormat.interactive,
) -> None:
    """
    Check that an environment file is bounded, parses and has a free start pose.

    Exits with code 3 and the error code of the violated invariant otherwise.
    """
    _setup_output(verbose, mute, quiet, output, log_file, json_log)
    with _errors(verbose):
        cfg = experiment_config(config_file, overrides, **{'env.path': path})
        source = resolve_environment_path(cfg.env.path)
        om = get_output_manager()
        om.step(f'Validating {source}', 'info')
        start = cfg.env.start
        if start is not None and len(start) == 2:
            start = (start[0], start[1], 0.0)
        env = load_environment(source, cfg.env.cell_size, cfg.world.resolution, cfg.env.origin, start,
                               cfg.world.robot_radius)
        occupied = int(np.count_nonzero(env.occupied))
        rows = [
            ['file', str(source)],
            ['size [m]', f'{env.width:.2f} x {env.height:.2f}'],
            ['cells', f'{env.shape[0]} x {env.shape[1]}'],
            ['free cells', str(env.occupied.size - occupied)],
            ['occupied cells', str(occupied)],
            ['start', f'({env.start.x:.2f}, {env.start.y:.2f}, {env.start.theta:.2f})'],
        ]
        om.summary_table('Environment', ['property', 'value'], rows)
        om.success('Environment is valid')


def run_cli() -> None:
    """Run the typer application."""
    app()
