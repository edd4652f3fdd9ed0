"""Shared fixtures: small environments and fast experiment configs."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rotcam_slam.kinematics.omni import KinematicParams
from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.utility.config import ExperimentConfig
from rotcam_slam.utility.logging_config import reset_logging
from rotcam_slam.world.environment import Environment, parse_ascii, upsample


def make_env(text: str, cell_size: float = 0.25, resolution: float = 0.05,
             start: tuple[float, float, float] | None = None, name: str = 'test') -> Environment:
    """Environment from ASCII rows (top line first) at ``cell_size`` per character."""
    grid = parse_ascii(text.strip('\n') + '\n')
    occupied = upsample(grid, int(round(cell_size / resolution)))
    if start is None:
        start = (occupied.shape[1] * resolution / 2.0, occupied.shape[0] * resolution / 2.0, 0.0)
    return Environment(occupied, resolution, (0.0, 0.0), Pose2D(*start), name)


def room_text(width: int, height: int) -> str:
    """Empty bordered room, ``width`` x ``height`` characters."""
    rows = ['#' * width] + ['#' + '.' * (width - 2) + '#' for _ in range(height - 2)] + ['#' * width]
    return '\n'.join(rows)


@pytest.fixture(autouse=True)
def _reset_logging():
    yield
    reset_logging()


@pytest.fixture
def params() -> KinematicParams:
    return KinematicParams()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def box_env() -> Environment:
    """4 m x 4 m empty room, robot in the middle."""
    return make_env(room_text(16, 16))


@pytest.fixture
def corridor_env() -> Environment:
    """Two rooms joined by a 0.75 m wide door."""
    text = '\n'.join([
        '################',
        '#......#.......#',
        '#......#.......#',
        '#..............#',
        '#..............#',
        '#..............#',
        '#......#.......#',
        '#......#.......#',
        '################',
    ])
    return make_env(text, start=(0.9, 1.1, 0.0))


@pytest.fixture
def fast_cfg() -> ExperimentConfig:
    """Short, quiet trials on the bundled single room."""
    return ExperimentConfig.from_dict({
        'duration': 4.0,
        'trials': 2,
        'env': {'path': 'room'},
        'record': {'window': 1.0},
    })


def angle_close(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(math.remainder(a - b, 2.0 * math.pi)) <= tol
