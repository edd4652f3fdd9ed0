#!/usr/bin/env python3

"""
Logging for the simulator.

Every record carries the subsystem that wrote it (``subject``), the trial it
belongs to (``HH_NC#3``) and the simulated time of that trial when the trial
loop has published one via :func:`set_sim_time`. The console gets rich
output on stderr; ``--log-file`` adds a plain or JSON lines file.

    init_logging(verbose=1, log_file='trial.log', json_logging=True)
    logger = get_sim_logger(Subject.SLAM, trial='HH#7')
    logger.info('Loop closure 12 -> 40')
"""

from __future__ import annotations

import json
import logging
import time
from collections.abc import MutableMapping
from enum import Enum
from typing import Any

from rich.console import Console
from rich.markup import escape
from rich.theme import Theme

ROOT_LOGGER_NAME = "rotcam_slam"


class Subject(str, Enum):
    """Subsystem that produced a record."""
    WORLD = "WORLD"
    ESTIMATION = "ESTIMATION"
    SLAM = "SLAM"
    PLANNER = "PLANNER"
    CONTROL = "CONTROL"
    METRICS = "METRICS"
    HARNESS = "HARNESS"
    INFO = "INFO"

    def __str__(self) -> str:
        return self.value


# simulated time per trial label, written by the trial loop
_sim_clock: dict[str, float] = {}


def set_sim_time(trial: str, sim_time: float | None) -> None:
    """Publish the simulated time of a trial; None clears it."""
    if sim_time is None:
        _sim_clock.pop(trial, None)
    else:
        _sim_clock[trial] = sim_time


def _context(record: logging.LogRecord) -> str:
    parts = [getattr(record, 'subject', Subject.INFO.value)]
    trial = getattr(record, 'trial', None)
    if trial:
        parts.append(trial)
    sim_time = getattr(record, 'sim_time', None)
    if sim_time is not None:
        parts.append(f't={sim_time:.1f}s')
    return '[' + ' '.join(parts) + ']'


class PlainFormatter(logging.Formatter):
    """``2026-01-01 12:00:00 WARNING [CONTROL HH#3 t=41.2s] message`` lines for log files."""

    def format(self, record: logging.LogRecord) -> str:
        stamp = self.formatTime(record, "%Y-%m-%d %H:%M:%S")
        line = f"{stamp} {record.levelname} {_context(record)} {record.getMessage()}"
        if record.exc_info:
            line += "\n" + self.formatException(record.exc_info)
        return line


class JSONFormatter(logging.Formatter):
    """One JSON object per record."""

    def format(self, record: logging.LogRecord) -> str:
        data = {
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(record.created)),
            "level": record.levelname,
            "subject": getattr(record, 'subject', Subject.INFO.value),
            "trial": getattr(record, 'trial', None),
            "sim_time": getattr(record, 'sim_time', None),
            "message": record.getMessage(),
            "module": record.module,
            "line": record.lineno,
        }
        if record.exc_info:
            data["exception"] = self.formatException(record.exc_info)
        return json.dumps(data)


class ConsoleHandler(logging.Handler):
    """Rich output on stderr; warnings and errors are colored as a whole line."""

    STYLES = {logging.DEBUG: "debug", logging.INFO: "info", logging.WARNING: "warning", logging.ERROR: "error"}

    def __init__(self, level: int = logging.NOTSET, mute: bool = False):
        super().__init__(level)
        self.mute = mute
        self.console = Console(
            theme=Theme({"info": "cyan", "warning": "yellow", "error": "red bold", "debug": "dim"}),
            stderr=True,
        )

    def emit(self, record: logging.LogRecord) -> None:
        if self.mute and record.levelno < logging.ERROR:
            return
        try:
            style = self.STYLES[min(max(record.levelno, logging.DEBUG) // 10 * 10, logging.ERROR)]
            context, message = escape(_context(record)), escape(record.getMessage())
            if record.levelno >= logging.WARNING:
                self.console.print(f"[{style}]{context} {message}[/{style}]")
            else:
                self.console.print(f"[{style}]{context}[/{style}] {message}")
        except Exception:
            self.handleError(record)


class SimLoggerAdapter(logging.LoggerAdapter):  # type: ignore[type-arg]
    """Stamps subject, trial and the trial's current simulated time into each record."""

    extra: dict[str, Any]

    def __init__(self, logger: logging.Logger, subject: str = "INFO", trial: str | None = None):
        super().__init__(logger, {"subject": subject, "trial": trial})
        self.subject = subject
        self.trial = trial

    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> tuple[Any, MutableMapping[str, Any]]:
        extra = kwargs.setdefault("extra", {})
        extra.setdefault("subject", self.subject)
        extra.setdefault("trial", self.trial)
        if self.trial is not None:
            extra.setdefault("sim_time", _sim_clock.get(self.trial))
        return msg, kwargs


_adapters: dict[str, SimLoggerAdapter] = {}


def init_logging(
    verbose: int = 0,
    mute: bool = False,
    log_file: str | None = None,
    json_logging: bool = False,
    console_output: bool = True,
) -> logging.Logger:
    """
    Configure the package logger.

    The console shows warnings by default, events with ``verbose=1`` and
    per-step traces with ``verbose=2``; a log file always receives
    everything from INFO (DEBUG at ``verbose=2``) upwards.

    :param verbose: 0 normal, 1 verbose, 2 debug
    :param mute: Only errors reach the console
    :param log_file: Additional log file
    :param json_logging: JSON lines instead of plain text in the log file
    :param console_output: Attach the rich console handler
    :return: The ``rotcam_slam`` logger
    """
    logger = logging.getLogger(ROOT_LOGGER_NAME)
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()
    logger.propagate = False
    logger.setLevel(logging.DEBUG if verbose >= 2 else logging.INFO)

    if console_output:
        console = ConsoleHandler(mute=mute)
        console.setLevel((logging.WARNING, logging.INFO, logging.DEBUG)[min(verbose, 2)])
        logger.addHandler(console)

    if log_file:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setFormatter(JSONFormatter() if json_logging else PlainFormatter())
        logger.addHandler(file_handler)

    if not logger.handlers:
        logger.addHandler(logging.NullHandler())

    _adapters.clear()
    return logger


def get_sim_logger(subject: str | Subject = Subject.INFO, trial: str | None = None) -> SimLoggerAdapter:
    """
    Cached adapter for a subsystem, optionally bound to a trial label.

    :param subject: Subject or its name, case-insensitive
    :param trial: Trial label such as ``HH_NC#3``
    """
    name = subject.value if isinstance(subject, Subject) else subject.upper()
    key = f"{name}:{trial}"
    if key not in _adapters:
        _adapters[key] = SimLoggerAdapter(logging.getLogger(ROOT_LOGGER_NAME), subject=name, trial=trial)
    return _adapters[key]


def release_trial_loggers(trial: str) -> None:
    """Forget the cached adapters and the clock of a finished trial."""
    _sim_clock.pop(trial, None)
    for key in [key for key, adapter in _adapters.items() if adapter.trial == trial]:
        del _adapters[key]


def reset_logging() -> None:
    """Drop handlers, cached adapters and trial clocks (tests)."""
    logger = logging.getLogger(ROOT_LOGGER_NAME)
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()
    _adapters.clear()
    _sim_clock.clear()
