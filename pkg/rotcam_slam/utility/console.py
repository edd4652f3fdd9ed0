#!/usr/bin/env python3

"""
CLI output using Rich.

This module provides a unified output interface supporting:
- Interactive mode: badges, a batch progress bar and a summary table
- CI mode: GitHub Actions / GitLab CI annotations
- JSON mode: Machine-readable structured output
- Quiet mode: errors only

Usage:
    from rotcam_slam.utility.console import get_output_manager

    output_manager = get_output_manager()
    output_manager.step("Running trial HH#3")
    output_manager.success("Trial finished", steps=6000, loops=4)
"""

from __future__ import annotations

import json
import os
import sys
import time
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from rich.console import Console
from rich.markup import escape
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table
from rich.text import Text
from rich.theme import Theme


class OutputFormat(Enum):
    """Output format modes."""
    INTERACTIVE = "interactive"
    CI = "ci"
    JSON = "json"
    QUIET = "quiet"


class CIProvider(Enum):
    """CI/CD provider detection."""
    GITHUB = "github"
    GITLAB = "gitlab"
    GENERIC = "generic"
    NONE = "none"


_CI_ENV_MAP = {
    "GITHUB_ACTIONS": CIProvider.GITHUB,
    "GITLAB_CI": CIProvider.GITLAB,
    "CI": CIProvider.GENERIC,
}

# (background, text)
BADGE_COLORS = {
    "info": ("cyan", "black"),
    "success": ("green", "white"),
    "warning": ("yellow", "black"),
    "error": ("red", "white"),
    "debug": ("bright_black", "white"),
    "trial": ("magenta", "white"),
    "batch": ("blue", "white"),
}

ICONS = {
    "success": "✓",
    "error": "✗",
    "warning": "⚠",
    "info": "ℹ",
}


@dataclass
class StepInfo:
    """A running step."""
    name: str
    subject: str = "INFO"
    start_time: float = field(default_factory=time.time)


class OutputManager:
    """
    Unified output manager for the CLI.

    Handles the output formats and provides one API for steps, results,
    batch progress and the summary table.
    """

    def __init__(
        self,
        format: OutputFormat = OutputFormat.INTERACTIVE,
        verbose: int = 0,
        mute: bool = False,
    ):
        self.format = format
        self.verbose = int(verbose)
        self.mute = mute
        self.ci_provider = self._detect_ci_provider()
        self._current_step: StepInfo | None = None
        self._console = Console(theme=Theme({
            "info": "cyan", "success": "green", "warning": "yellow", "error": "red bold", "debug": "dim",
        }), stderr=format != OutputFormat.INTERACTIVE)

    @staticmethod
    def _detect_ci_provider() -> CIProvider:
        for env_var, provider in _CI_ENV_MAP.items():
            if os.environ.get(env_var):
                return provider
        return CIProvider.NONE

    @staticmethod
    def _badge(label: str, badge_type: str | None = None) -> Text:
        bg_color, fg_color = BADGE_COLORS.get((badge_type or label).lower(), ("#7f8c8d", "white"))
        return Text(f" {label} ", style=f"bold {fg_color} on {bg_color}")

    def _line(self, label: str, badge_type: str, message: str) -> None:
        line = Text()
        line.append_text(self._badge(label, badge_type))
        line.append(f"  {message}")
        self._console.print(line, highlight=False)

    def _json_output(self, event: str, **data: Any) -> None:
        out = {"event": event, "timestamp": time.time()}
        out.update({k: v for k, v in data.items() if v is not None})
        print(json.dumps(out, default=str), flush=True)

    def _emit(self, event: str, message: str, data: dict[str, Any] | None = None, force: bool = False) -> bool:
        """Handle quiet and JSON formats; True when nothing is left to print."""
        if self.format == OutputFormat.QUIET and not force:
            return True
        if self.format == OutputFormat.JSON:
            self._json_output(event, message=message, **(data or {}))
            return True
        return False

    # --- Public API ---

    def step(self, message: str, subject: str = "INFO") -> None:
        """Announce a step."""
        self._current_step = StepInfo(message, subject)
        if self.mute or self._emit("step", message, {"subject": subject}):
            return
        if self.format == OutputFormat.CI:
            print(f"[{subject.upper()}] {message}")
        elif self.verbose >= 1:
            self._line(subject.upper(), subject, escape(message))

    def success(self, message: str | None = None, **stats: Any) -> None:
        """Mark the current step as done, optionally with statistics."""
        step = self._current_step
        text = message or (step.name if step else "Done")
        if step:
            stats.setdefault("duration", round(time.time() - step.start_time, 1))
        if self.mute or self._emit("success", text, stats):
            return
        details = " • ".join(f"{k}: {v}" for k, v in stats.items())
        if self.format == OutputFormat.CI:
            print(f"[SUCCESS] {text}" + (f" ({details})" if details else ""))
            return
        self._line("SUCCESS", "success", f"{ICONS['success']} {escape(text)}")
        if details:
            self._console.print(f"           [dim]{escape(details)}[/dim]", highlight=False)

    def info(self, message: str) -> None:
        if self.mute or self._emit("info", message):
            return
        if self.format == OutputFormat.CI:
            print(f"[INFO] {message}")
        else:
            self._line("INFO", "info", f"{ICONS['info']} {escape(message)}")

    def warning(self, message: str) -> None:
        if self.mute or self._emit("warning", message):
            return
        if self.format == OutputFormat.CI:
            if self.ci_provider == CIProvider.GITHUB:
                print(f"::warning::{message}")
            elif self.ci_provider == CIProvider.GITLAB:
                print(f"\033[0;33mWARNING: {message}\033[0m")
            else:
                print(f"[WARNING] {message}")
        else:
            self._line("WARNING", "warning", f"{ICONS['warning']} {escape(message)}")

    def error(self, message: str, exception: Exception | None = None) -> None:
        """Errors are shown in every format."""
        if self._emit("error", message, {"exception": str(exception) if exception else None}, force=True):
            return
        if self.format in (OutputFormat.CI, OutputFormat.QUIET):
            if self.ci_provider == CIProvider.GITHUB:
                print(f"::error::{message}")
            else:
                print(f"[ERROR] {message}", file=sys.stderr)
            return
        self._line("ERROR", "error", f"{ICONS['error']} {escape(message)}")
        if exception and self.verbose >= 2:
            self._console.print(f"  [dim]{escape(repr(exception))}[/dim]", highlight=False)

    def summary_table(self, title: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
        """Render a table of results (one JSON event with all rows in JSON mode)."""
        if self.format == OutputFormat.JSON:
            self._json_output("summary", title=title, rows=[dict(zip(header, r)) for r in rows])
            return
        if self.mute or self.format == OutputFormat.QUIET:
            return
        if self.format == OutputFormat.CI:
            print(title)
            print("\t".join(header))
            for row in rows:
                print("\t".join(str(c) for c in row))
            return
        table = Table(title=title, header_style="bold cyan")
        for i, name in enumerate(header):
            table.add_column(name, justify="left" if i == 0 else "right")
        for row in rows:
            table.add_row(*(escape(str(c)) for c in row))
        self._console.print(table)

    @contextmanager
    def batch_progress(self, total: int, description: str = "Trials") -> Iterator[Any]:
        """
        Progress bar over batch jobs; yields a callable advancing it by one.

        Non-interactive formats get a no-op callable.
        """
        if self.mute or self.format != OutputFormat.INTERACTIVE:
            yield lambda label=None: None
            return
        progress = Progress(
            TextColumn("[bold blue]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            TextColumn("{task.fields[last]}"),
            console=self._console,
            transient=False,
        )
        with progress:
            task = progress.add_task(description, total=total, last="")

            def advance(label: str | None = None) -> None:
                progress.update(task, advance=1, last=label or "")

            yield advance


_output_manager: OutputManager | None = None


def get_output_manager() -> OutputManager:
    """Get the global OutputManager instance."""
    global _output_manager
    if _output_manager is None:
        _output_manager = OutputManager()
    return _output_manager


def init_output_manager(
    format: str | OutputFormat = OutputFormat.INTERACTIVE,
    verbose: int = 0,
    mute: bool = False,
) -> OutputManager:
    """Initialize the global OutputManager with specific settings."""
    global _output_manager

    if isinstance(format, str):
        try:
            format = OutputFormat(format)
        except ValueError:
            format = OutputFormat.INTERACTIVE

    if format == OutputFormat.INTERACTIVE and os.environ.get("CI"):
        format = OutputFormat.CI

    _output_manager = OutputManager(format=format, verbose=verbose, mute=mute)
    return _output_manager


def reset_output_manager() -> None:
    """Reset the global OutputManager (for testing)."""
    global _output_manager
    _output_manager = None
