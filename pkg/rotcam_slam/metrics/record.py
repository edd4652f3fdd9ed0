#!/usr/bin/env python3

"""
Everything a trial records for later evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rotcam_slam.utility.exceptions import MetricError

STATUS_SUCCESS = 'success'
STATUS_FAILED = 'failed'

ESTIMATE_COLUMNS = ('time', 'x', 'y', 'theta', 'psi', 'var_x', 'var_y', 'var_psi')
TRUTH_COLUMNS = ('time', 'x', 'y', 'theta', 'psi')
COMMAND_COLUMNS = ('time', 'vx', 'vy', 'dtheta', 'dgamma', 'body_vy')
MAP_COLUMNS = ('time', 'entropy_bits', 'entropy_norm', 'explored_area', 'bac')


@dataclass
class TrialRecord:
    """
    Time series of one trial.

    Control-step series share ``times``; map samples have their own, coarser
    time base. Timestamps of both must be strictly increasing.
    """
    label: str
    seed: int
    mode: str = 'A'
    merged: bool = True
    times: list[float] = field(default_factory=list)
    estimates: list[tuple[float, ...]] = field(default_factory=list)
    truth: list[tuple[float, ...]] = field(default_factory=list)
    commands: list[tuple[float, ...]] = field(default_factory=list)
    path_length: list[float] = field(default_factory=list)
    wheel_rotation: list[float] = field(default_factory=list)
    robot_rotation: list[float] = field(default_factory=list)
    camera_rotation: list[float] = field(default_factory=list)
    loops: list[int] = field(default_factory=list)
    map_samples: list[tuple[float, ...]] = field(default_factory=list)
    loop_events: list[tuple[float, int, int]] = field(default_factory=list)
    status: str = STATUS_SUCCESS
    reason: str = ''
    complete: bool = False
    final_labels: np.ndarray | None = None
    gt_labels: np.ndarray | None = None

    def add_step(self, time: float, estimate: tuple[float, ...], truth: tuple[float, ...],
                 command: tuple[float, ...], path_length: float, wheel_rotation: float,
                 robot_rotation: float, camera_rotation: float, loops: int) -> None:
        if self.times and not time > self.times[-1]:
            raise MetricError(f'Step time {time} does not follow {self.times[-1]}')
        self.times.append(float(time))
        self.estimates.append(tuple(float(v) for v in estimate))
        self.truth.append(tuple(float(v) for v in truth))
        self.commands.append(tuple(float(v) for v in command))
        self.path_length.append(float(path_length))
        self.wheel_rotation.append(float(wheel_rotation))
        self.robot_rotation.append(float(robot_rotation))
        self.camera_rotation.append(float(camera_rotation))
        self.loops.append(int(loops))

    def add_map_sample(self, time: float, entropy_bits: float, entropy_norm: float, explored_area: float,
                       bac: float) -> None:
        if self.map_samples and not time > self.map_samples[-1][0]:
            raise MetricError(f'Map sample time {time} does not follow {self.map_samples[-1][0]}')
        self.map_samples.append((float(time), float(entropy_bits), float(entropy_norm), float(explored_area),
                                 float(bac)))

    def add_loop_event(self, time: float, source: int, target: int) -> None:
        self.loop_events.append((float(time), int(source), int(target)))

    def fail(self, reason: str) -> None:
        self.status = STATUS_FAILED
        self.reason = reason

    @property
    def succeeded(self) -> bool:
        return self.status == STATUS_SUCCESS

    @property
    def steps(self) -> int:
        return len(self.times)

    @property
    def duration(self) -> float:
        return self.times[-1] if self.times else 0.0

    def estimate_array(self) -> np.ndarray:
        return np.asarray(self.estimates, dtype=float).reshape(-1, len(ESTIMATE_COLUMNS))

    def truth_array(self) -> np.ndarray:
        return np.asarray(self.truth, dtype=float).reshape(-1, len(TRUTH_COLUMNS))

    def command_array(self) -> np.ndarray:
        return np.asarray(self.commands, dtype=float).reshape(-1, len(COMMAND_COLUMNS))

    def map_array(self) -> np.ndarray:
        return np.asarray(self.map_samples, dtype=float).reshape(-1, len(MAP_COLUMNS))
