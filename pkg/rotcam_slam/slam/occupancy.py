#!/usr/bin/env python3

"""
Log-odds occupancy grid built from camera frames, with entropy and
three-class cell classification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.utility.config import SlamConfig
from rotcam_slam.world.camera import CameraObservation
from rotcam_slam.world.raycast import cast_rays, endpoint_cells

_EMPTY_CELLS = np.zeros((0, 2), dtype=np.int64)


class CellClass(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


@dataclass(frozen=True)
class CellCounts:
    free: int
    occupied: int
    unknown: int

    @property
    def total(self) -> int:
        return self.free + self.occupied + self.unknown


@dataclass(frozen=True, eq=False)
class CellUpdate:
    """Cells seen free and cells seen occupied in one frame, (N, 2) arrays of (row, col)."""
    free_cells: np.ndarray
    occupied_cells: np.ndarray

    @classmethod
    def from_hits(cls, hits) -> CellUpdate:
        """Build from ((row, col), occupied?) pairs."""
        free = [cell for cell, occ in hits if not occ]
        occupied = [cell for cell, occ in hits if occ]
        return cls(
            np.asarray(free, dtype=np.int64).reshape(-1, 2),
            np.asarray(occupied, dtype=np.int64).reshape(-1, 2),
        )


class OccupancyGrid:
    """
    Occupancy probabilities stored as log-odds, plus an observed mask.

    Unobserved cells have log-odds 0 and report p = 0.5.
    """

    def __init__(self, shape: tuple[int, int], resolution: float = 0.05,
                 origin: tuple[float, float] = (0.0, 0.0), l_max: float = 4.0):
        self.log_odds = np.zeros(shape)
        self.observed = np.zeros(shape, dtype=bool)
        self.resolution = float(resolution)
        self.origin = (float(origin[0]), float(origin[1]))
        self.l_max = float(l_max)

    @classmethod
    def like(cls, env, l_max: float = 4.0) -> OccupancyGrid:
        """Empty grid on the lattice of an environment."""
        return cls(env.shape, env.resolution, env.origin, l_max)

    @classmethod
    def from_probabilities(cls, probabilities, observed=None, resolution: float = 0.05,
                           origin: tuple[float, float] = (0.0, 0.0), l_max: float = 4.0) -> OccupancyGrid:
        """Grid with the given cell probabilities; observed defaults to every cell."""
        p = np.asarray(probabilities, dtype=float)
        grid = cls(p.shape, resolution, origin, l_max)
        with np.errstate(divide='ignore'):
            grid.log_odds = np.log(p) - np.log1p(-p)
        grid.observed = np.ones(p.shape, dtype=bool) if observed is None else np.asarray(observed, dtype=bool)
        grid.log_odds[~grid.observed] = 0.0
        return grid

    @property
    def shape(self) -> tuple[int, int]:
        return self.log_odds.shape

    @property
    def cell_area(self) -> float:
        return self.resolution * self.resolution

    def probabilities(self) -> np.ndarray:
        """Cell occupancy probabilities, 0.5 where unobserved."""
        return 1.0 / (1.0 + np.exp(-self.log_odds))

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor((y - self.origin[1]) / self.resolution)),
                int(math.floor((x - self.origin[0]) / self.resolution)))

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (self.origin[0] + (col + 0.5) * self.resolution,
                self.origin[1] + (row + 0.5) * self.resolution)

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.shape[0] and 0 <= col < self.shape[1]

    def copy(self) -> OccupancyGrid:
        grid = OccupancyGrid(self.shape, self.resolution, self.origin, self.l_max)
        grid.log_odds = self.log_odds.copy()
        grid.observed = self.observed.copy()
        return grid


def _in_bounds(cells: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if cells.size == 0:
        return _EMPTY_CELLS
    keep = (cells[:, 0] >= 0) & (cells[:, 0] < shape[0]) & (cells[:, 1] >= 0) & (cells[:, 1] < shape[1])
    return cells[keep]


def update_occupancy(grid: OccupancyGrid, hits, cfg: SlamConfig | None = None) -> OccupancyGrid:
    """
    Apply one frame of observations.

    Free cells get ``l_free``, occupied cells ``l_occ``; each cell is updated
    at most once per frame and a cell seen both ways counts as occupied.
    Log-odds are clamped to +-l_max.

    :param grid: Grid, updated in place
    :param hits: CellUpdate, CameraObservation or ((row, col), occupied?) pairs
    :param cfg: Log-odds increments
    :return: The same grid
    """
    cfg = cfg or SlamConfig()
    if not isinstance(hits, (CellUpdate, CameraObservation)):
        hits = CellUpdate.from_hits(hits)
    rows, cols = grid.shape
    occupied = _in_bounds(np.asarray(hits.occupied_cells, dtype=np.int64).reshape(-1, 2), grid.shape)
    free = _in_bounds(np.asarray(hits.free_cells, dtype=np.int64).reshape(-1, 2), grid.shape)

    occ_mask = np.zeros(rows * cols, dtype=bool)
    occ_mask[occupied[:, 0] * cols + occupied[:, 1]] = True
    free_mask = np.zeros(rows * cols, dtype=bool)
    free_mask[free[:, 0] * cols + free[:, 1]] = True
    free_mask &= ~occ_mask

    flat = grid.log_odds.reshape(-1)
    flat[occ_mask] += cfg.l_occ
    flat[free_mask] += cfg.l_free
    np.clip(flat, -grid.l_max, grid.l_max, out=flat)
    grid.observed.reshape(-1)[occ_mask | free_mask] = True
    return grid


def project_observation(grid: OccupancyGrid, obs: CameraObservation, pose: Pose2D) -> CellUpdate:
    """
    Re-project a camera frame from an estimated camera pose (x, y, psi).

    Every ray keeps its bearing and measured range; cells the ray passes
    before its endpoint are free, the endpoint cell of a ray that hit an
    obstacle is occupied.
    """
    if obs.ranges.size == 0:
        return CellUpdate(_EMPTY_CELLS, _EMPTY_CELLS)
    angles = pose.theta + obs.bearings
    bundle = cast_rays(None, grid.resolution, grid.origin, pose.x, pose.y, angles, obs.ranges,
                       collect_cells=True, shape=grid.shape)
    before_end = bundle.free_entry < obs.ranges[bundle.free_ray_ids] - 1e-9
    free = bundle.free_cells[before_end]
    ends = endpoint_cells(grid.resolution, grid.origin, pose.x, pose.y, angles[obs.hits], obs.ranges[obs.hits])
    occupied = _in_bounds(ends, grid.shape)
    if free.size:
        free = np.unique(free, axis=0)
    if occupied.size:
        occupied = np.unique(occupied, axis=0)
    return CellUpdate(free, occupied)


def binary_entropy(p) -> np.ndarray:
    """Entropy in bits of Bernoulli(p), 0 at p in {0, 1}."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    inner = (p > 0.0) & (p < 1.0)
    q = p[inner]
    out[inner] = -q * np.log2(q) - (1.0 - q) * np.log2(1.0 - q)
    return out


def map_entropy(grid: OccupancyGrid) -> tuple[float, float]:
    """
    Summed entropy of the observed cells and its mean per observed cell.

    :return: (bits, bits per observed cell); the mean is 0 with no observed cell
    """
    observed = grid.observed
    count = int(observed.sum())
    if count == 0:
        return 0.0, 0.0
    bits = float(binary_entropy(grid.probabilities()[observed]).sum())
    return bits, bits / count


def classify_labels(grid: OccupancyGrid, free_threshold: float = 0.35,
                    occupied_threshold: float = 0.65) -> np.ndarray:
    """Per-cell CellClass values."""
    p = grid.probabilities()
    labels = np.full(grid.shape, CellClass.UNKNOWN, dtype=np.int8)
    labels[grid.observed & (p <= free_threshold)] = CellClass.FREE
    labels[grid.observed & (p >= occupied_threshold)] = CellClass.OCCUPIED
    return labels


def classify_cells(grid: OccupancyGrid, free_threshold: float = 0.35,
                   occupied_threshold: float = 0.65) -> CellCounts:
    labels = classify_labels(grid, free_threshold, occupied_threshold)
    counts = np.bincount(labels.reshape(-1), minlength=3)
    return CellCounts(int(counts[CellClass.FREE]), int(counts[CellClass.OCCUPIED]), int(counts[CellClass.UNKNOWN]))


def explored_area(grid: OccupancyGrid, free_threshold: float = 0.35, occupied_threshold: float = 0.65) -> float:
    """Area in square meters of cells classified free or occupied."""
    counts = classify_cells(grid, free_threshold, occupied_threshold)
    return (counts.free + counts.occupied) * grid.cell_area
