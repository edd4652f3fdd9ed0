#!/usr/bin/env python3

"""
Ground-truth environments.

Maps are ingested from an ASCII grid ('#' occupied, '.' free) or a binary
PGM (P5, dark pixels occupied). The first text line / image row is the top of
the map (largest y); internally row 0 is the bottom so that row grows with y.
Files coarser than the map resolution are upsampled by an integer factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.utility.exceptions import (
    CollisionError,
    ConfigError,
    DisconnectedEnvironmentError,
    MalformedEnvironmentError,
    StartPoseError,
    UnboundedEnvironmentError,
)
from rotcam_slam.utility.logging_config import Subject, get_sim_logger

OCCUPIED_CHARS = frozenset('#')
FREE_CHARS = frozenset('.')
DEFAULT_ROBOT_RADIUS = 0.2


@dataclass(frozen=True, eq=False)
class Environment:
    """Bounded boolean occupancy grid with geometry."""
    occupied: np.ndarray
    resolution: float = 0.05
    origin: tuple[float, float] = (0.0, 0.0)
    start: Pose2D = field(default_factory=Pose2D)
    name: str = ''

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupied.shape

    @property
    def width(self) -> float:
        return self.occupied.shape[1] * self.resolution

    @property
    def height(self) -> float:
        return self.occupied.shape[0] * self.resolution

    @property
    def free(self) -> np.ndarray:
        return ~self.occupied

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) containing a world point."""
        col = int(math.floor((x - self.origin[0]) / self.resolution))
        row = int(math.floor((y - self.origin[1]) / self.resolution))
        return row, col

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (self.origin[0] + (col + 0.5) * self.resolution,
                self.origin[1] + (row + 0.5) * self.resolution)

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.shape[0] and 0 <= col < self.shape[1]

    def require_free_point(self, x: float, y: float) -> None:
        """Raise CollisionError if the point lies outside the map or in an obstacle."""
        row, col = self.world_to_cell(x, y)
        if not self.in_bounds(row, col) or self.occupied[row, col]:
            raise CollisionError(f'Point ({x:.3f}, {y:.3f}) is not in free space')

    def collides(self, x: float, y: float, radius: float = DEFAULT_ROBOT_RADIUS) -> bool:
        """
        True if a disk of ``radius`` at (x, y) overlaps an occupied cell or leaves the map.

        Exact disk against axis-aligned cell boxes; touching is not contact.
        """
        res = self.resolution
        gx = (x - self.origin[0]) / res
        gy = (y - self.origin[1]) / res
        rad = radius / res
        c0, c1 = int(math.floor(gx - rad)), int(math.floor(gx + rad))
        r0, r1 = int(math.floor(gy - rad)), int(math.floor(gy + rad))
        if c0 < 0 or r0 < 0 or c1 >= self.shape[1] or r1 >= self.shape[0]:
            return True
        window = self.occupied[r0:r1 + 1, c0:c1 + 1]
        if not window.any():
            return False
        rows, cols = np.nonzero(window)
        rows = rows + r0
        cols = cols + c0
        nearest_x = np.clip(gx, cols, cols + 1)
        nearest_y = np.clip(gy, rows, rows + 1)
        dist2 = (nearest_x - gx) ** 2 + (nearest_y - gy) ** 2
        return bool(np.any(dist2 < rad * rad))


def parse_ascii(text: str) -> np.ndarray:
    """
    Parse an ASCII grid into a boolean occupancy array (row 0 = bottom line).

    :param text: File contents
    :return: Boolean array, True for occupied
    """
    lines = [line.rstrip('\r') for line in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MalformedEnvironmentError('ASCII map is empty')
    width = len(lines[0])
    grid = np.zeros((len(lines), width), dtype=bool)
    for i, line in enumerate(lines):
        if len(line) != width:
            raise MalformedEnvironmentError(f'ASCII map line {i + 1} has {len(line)} columns, expected {width}')
        for j, char in enumerate(line):
            if char in OCCUPIED_CHARS:
                grid[i, j] = True
            elif char not in FREE_CHARS:
                raise MalformedEnvironmentError(f'Unexpected character {char!r} at line {i + 1}, column {j + 1}')
    return np.flipud(grid)


def parse_pgm(data: bytes) -> np.ndarray:
    """
    Parse a binary P5 PGM (0 = occupied, 255 = free) into a boolean occupancy array.

    Pixels darker than half of maxval count as occupied.
    """
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise MalformedEnvironmentError('PGM header is truncated')
        if data[pos:pos + 1] == b'#':
            while pos < len(data) and data[pos:pos + 1] not in (b'\n', b'\r'):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval

    if tokens[0] != b'P5':
        raise MalformedEnvironmentError(f'Unsupported PGM magic {tokens[0]!r}, expected P5')
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as e:
        raise MalformedEnvironmentError('PGM header holds a non-integer field') from e
    if width <= 0 or height <= 0 or not 0 < maxval < 256:
        raise MalformedEnvironmentError('PGM dimensions or maxval out of range')
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos) \
        if len(data) - pos >= width * height else None
    if pixels is None:
        raise MalformedEnvironmentError('PGM pixel data is truncated')
    image = pixels.reshape(height, width)
    return np.flipud(image < (maxval + 1) / 2.0)


def upsample(grid: np.ndarray, factor: int) -> np.ndarray:
    """Repeat every cell ``factor`` times along both axes."""
    if factor == 1:
        return grid
    return np.repeat(np.repeat(grid, factor, axis=0), factor, axis=1)


def validate_grid(occupied: np.ndarray) -> None:
    """Check the boundary ring is occupied and some free space exists."""
    border = np.concatenate((occupied[0, :], occupied[-1, :], occupied[:, 0], occupied[:, -1]))
    if not border.all():
        raise UnboundedEnvironmentError('Map boundary has free cells')
    if occupied.all():
        raise DisconnectedEnvironmentError('Map has no free cell')


def default_start(occupied: np.ndarray) -> tuple[int, int]:
    """Free cell with the largest obstacle clearance (first in row-major order on ties)."""
    clearance = ndimage.distance_transform_edt(~occupied)
    flat = int(np.argmax(clearance))
    return divmod(flat, occupied.shape[1])


def load_environment(
    path: str | Path,
    cell_size: float | None = None,
    resolution: float = 0.05,
    origin: tuple[float, float] = (0.0, 0.0),
    start: tuple[float, float, float] | None = None,
    robot_radius: float = DEFAULT_ROBOT_RADIUS,
) -> Environment:
    """
    Load and validate an environment file.

    :param path: ASCII (.txt) or PGM file
    :param cell_size: Size of one character/pixel; 0.25 m for ASCII and 0.05 m for PGM by default
    :param resolution: Map resolution
    :param origin: Lower-left corner in world coordinates
    :param start: Start pose [x, y, theta]; defaults to the cell with most clearance
    :param robot_radius: Radius used to check the start pose
    :return: Environment
    """
    logger = get_sim_logger(Subject.WORLD)
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ConfigError(f'Cannot read environment file {path}: {e}') from e

    if data[:2] == b'P5':
        grid = parse_pgm(data)
        default_cell = 0.05
    else:
        try:
            text = data.decode('ascii')
        except UnicodeDecodeError as e:
            raise MalformedEnvironmentError(f'{path.name} is neither ASCII nor a P5 PGM') from e
        grid = parse_ascii(text)
        default_cell = 0.25

    cell = default_cell if cell_size is None else float(cell_size)
    ratio = cell / resolution
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9:
        raise ConfigError(f'env.cell_size {cell} is not an integer multiple of the map resolution {resolution}')

    validate_grid(grid)
    occupied = upsample(grid, factor)

    if start is None:
        row, col = default_start(occupied)
        sx = origin[0] + (col + 0.5) * resolution
        sy = origin[1] + (row + 0.5) * resolution
        start_pose = Pose2D(sx, sy, 0.0)
    else:
        start_pose = Pose2D(float(start[0]), float(start[1]), float(start[2]) if len(start) > 2 else 0.0)

    env = Environment(occupied, resolution, (float(origin[0]), float(origin[1])), start_pose, path.stem)
    row, col = env.world_to_cell(start_pose.x, start_pose.y)
    if not env.in_bounds(row, col) or occupied[row, col]:
        raise StartPoseError(f'Start ({start_pose.x:.2f}, {start_pose.y:.2f}) is outside free space')
    if env.collides(start_pose.x, start_pose.y, robot_radius):
        raise StartPoseError(f'Robot footprint at start ({start_pose.x:.2f}, {start_pose.y:.2f}) touches an obstacle')

    logger.info(f'Loaded {path.name}: {occupied.shape[1]}x{occupied.shape[0]} cells at {resolution} m, '
                f'{int(occupied.sum())} occupied')
    return env
