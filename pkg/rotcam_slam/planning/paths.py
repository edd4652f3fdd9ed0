#!/usr/bin/env python3

"""
Shortest paths on the inflated occupancy grid.

Occupied cells are inflated by the robot radius plus a margin and unknown
cells are not traversable. Dijkstra runs over the 8-connected lattice of the
known area's bounding box; diagonal moves must not cut a blocked corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from rotcam_slam.slam.occupancy import CellClass

_NEIGHBOUR_OFFSETS = ((0, 1, 1.0), (1, 0, 1.0), (1, 1, math.sqrt(2.0)), (1, -1, math.sqrt(2.0)))


def traversable_mask(labels: np.ndarray, resolution: float, robot_radius: float = 0.2,
                     extra_cells: int = 1, robot_cell: tuple[int, int] | None = None) -> np.ndarray:
    """
    Cells the robot centre may occupy.

    Cells within robot_radius + extra_cells of an occupied cell and unknown
    cells are blocked; around ``robot_cell`` only occupied cells stay blocked
    so the robot can always leave its current position.
    """
    occupied = labels == CellClass.OCCUPIED
    clearance = ndimage.distance_transform_edt(~occupied) * resolution
    inflation = robot_radius + extra_cells * resolution
    blocked = (clearance <= inflation) | (labels == CellClass.UNKNOWN)
    if robot_cell is not None:
        rows, cols = np.ogrid[:labels.shape[0], :labels.shape[1]]
        near = (rows - robot_cell[0]) ** 2 + (cols - robot_cell[1]) ** 2 <= (inflation / resolution) ** 2
        blocked &= ~(near & ~occupied)
    return ~blocked


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Path lengths (meters) from a start cell to every cell; inf where unreachable."""
    distances: np.ndarray
    predecessors: np.ndarray
    start: tuple[int, int]
    box: tuple[int, int, int, int]
    resolution: float

    def reachable(self) -> np.ndarray:
        return np.isfinite(self.distances)

    def distance(self, cell: tuple[int, int]) -> float:
        return float(self.distances[cell])

    def path_to(self, cell: tuple[int, int]) -> list[tuple[int, int]]:
        """Cells from the start to ``cell`` inclusive; empty when unreachable."""
        if not np.isfinite(self.distances[cell]):
            return []
        r0, r1, c0, c1 = self.box
        width = c1 - c0
        node = (cell[0] - r0) * width + (cell[1] - c0)
        cells = []
        while node >= 0:
            cells.append((int(node // width + r0), int(node % width + c0)))
            node = int(self.predecessors[node])
        cells.reverse()
        return cells


def _known_box(labels: np.ndarray, start: tuple[int, int]) -> tuple[int, int, int, int]:
    known = np.argwhere(labels != CellClass.UNKNOWN)
    if known.size == 0:
        return start[0], start[0] + 1, start[1], start[1] + 1
    r0 = min(int(known[:, 0].min()), start[0])
    r1 = max(int(known[:, 0].max()), start[0]) + 1
    c0 = min(int(known[:, 1].min()), start[1])
    c1 = max(int(known[:, 1].max()), start[1]) + 1
    return r0, r1, c0, c1


def lattice_graph(free: np.ndarray) -> sparse.csr_matrix:
    """Undirected 8-connected adjacency with unit/sqrt(2) weights over the free cells."""
    rows, cols = free.shape
    index = np.arange(rows * cols).reshape(rows, cols)
    src, dst, weight = [], [], []
    for dr, dc, cost in _NEIGHBOUR_OFFSETS:
        r_lo, r_hi = 0, rows - dr
        c_lo, c_hi = max(0, -dc), cols - max(0, dc)
        a = free[r_lo:r_hi, c_lo:c_hi]
        b = free[r_lo + dr:r_hi + dr, c_lo + dc:c_hi + dc]
        ok = a & b
        if dr and dc:
            ok &= free[r_lo + dr:r_hi + dr, c_lo:c_hi] & free[r_lo:r_hi, c_lo + dc:c_hi + dc]
        src.append(index[r_lo:r_hi, c_lo:c_hi][ok])
        dst.append(index[r_lo + dr:r_hi + dr, c_lo + dc:c_hi + dc][ok])
        weight.append(np.full(int(ok.sum()), cost))
    n = rows * cols
    return sparse.csr_matrix((np.concatenate(weight), (np.concatenate(src), np.concatenate(dst))), shape=(n, n))


def distance_field(labels: np.ndarray, start: tuple[int, int], resolution: float, robot_radius: float = 0.2,
                   extra_cells: int = 1) -> DistanceField:
    """
    Single-source shortest path lengths from ``start`` over the inflated grid.

    :param labels: CellClass labels of the map
    :param start: (row, col) of the robot
    :param resolution: Cell size in meters
    :return: DistanceField over the whole grid
    """
    free = traversable_mask(labels, resolution, robot_radius, extra_cells, robot_cell=start)
    r0, r1, c0, c1 = _known_box(labels, start)
    distances = np.full(labels.shape, np.inf)
    if not (0 <= start[0] < labels.shape[0] and 0 <= start[1] < labels.shape[1]) or not free[start]:
        return DistanceField(distances, np.full(1, -9999), start, (start[0], start[0] + 1, start[1], start[1] + 1),
                             resolution)
    window = free[r0:r1, c0:c1]
    graph = lattice_graph(window)
    source = (start[0] - r0) * (c1 - c0) + (start[1] - c0)
    dist, pred = csgraph.dijkstra(graph, directed=False, indices=source, return_predecessors=True)
    dist = dist.reshape(window.shape) * resolution
    dist[~window] = np.inf
    distances[r0:r1, c0:c1] = dist
    return DistanceField(distances, pred, start, (r0, r1, c0, c1), resolution)


def cells_to_points(cells: list[tuple[int, int]], resolution: float, origin: tuple[float, float]) -> np.ndarray:
    """Cell centres as an (N, 2) array of world (x, y)."""
    if not cells:
        return np.zeros((0, 2))
    arr = np.asarray(cells, dtype=float)
    return np.column_stack((origin[0] + (arr[:, 1] + 0.5) * resolution,
                            origin[1] + (arr[:, 0] + 0.5) * resolution))


def polyline_length(points: np.ndarray) -> float:
    if points.shape[0] < 2:
        return 0.0
    return float(np.sum(np.hypot(*np.diff(points, axis=0).T)))


def point_along(points: np.ndarray, distance: float) -> np.ndarray:
    """Point at arc length ``distance`` along a polyline, clamped to its ends."""
    if points.shape[0] == 1:
        return points[0].copy()
    seg = np.hypot(*np.diff(points, axis=0).T)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    if distance <= 0.0:
        return points[0].copy()
    if distance >= cum[-1]:
        return points[-1].copy()
    k = int(np.searchsorted(cum, distance, side='right')) - 1
    t = (distance - cum[k]) / seg[k] if seg[k] > 0 else 0.0
    return points[k] + t * (points[k + 1] - points[k])
