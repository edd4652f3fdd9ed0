#!/usr/bin/env python3

"""
Grid ray traversal (Amanatides & Woo) vectorized over a bundle of rays.

All rays advance one cell boundary per iteration; a ray retires when it enters
an occupied cell, leaves the grid or passes its range limit. Cells are
addressed as (row, col) with row along +y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_EMPTY_CELLS = np.zeros((0, 2), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class RayBundle:
    """Result of casting a bundle of rays."""
    ranges: np.ndarray
    hit: np.ndarray
    hit_cells: np.ndarray = field(default_factory=lambda: _EMPTY_CELLS)
    free_cells: np.ndarray = field(default_factory=lambda: _EMPTY_CELLS)
    free_ray_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    free_entry: np.ndarray = field(default_factory=lambda: np.zeros(0))


def cast_rays(
    occupied: np.ndarray | None,
    resolution: float,
    origin: tuple[float, float],
    x: float,
    y: float,
    angles: np.ndarray,
    max_range: float | np.ndarray,
    collect_cells: bool = False,
    shape: tuple[int, int] | None = None,
) -> RayBundle:
    """
    Cast rays from (x, y) through a grid.

    :param occupied: Boolean occupancy (rows along y); None traverses without stopping
    :param resolution: Cell size in meters
    :param origin: World coordinates of the lower-left grid corner
    :param x: Ray origin x
    :param y: Ray origin y
    :param angles: World-frame ray angles
    :param max_range: Range limit, scalar or one per ray
    :param collect_cells: Also return the traversed free cells and the hit cells
    :param shape: Grid shape, required when ``occupied`` is None
    :return: RayBundle
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    n = angles.size
    if occupied is not None:
        shape = occupied.shape
    if shape is None:
        raise ValueError('shape is required when no occupancy grid is given')
    rows, cols = shape
    limit = np.broadcast_to(np.asarray(max_range, dtype=float), (n,)) / resolution

    gx = (x - origin[0]) / resolution
    gy = (y - origin[1]) / resolution
    dx = np.cos(angles)
    dy = np.sin(angles)
    dx[np.abs(dx) < 1e-12] = 0.0
    dy[np.abs(dy) < 1e-12] = 0.0

    col = np.full(n, int(np.floor(gx)), dtype=np.int64)
    row = np.full(n, int(np.floor(gy)), dtype=np.int64)
    step_c = np.sign(dx).astype(np.int64)
    step_r = np.sign(dy).astype(np.int64)
    with np.errstate(divide='ignore', invalid='ignore'):
        delta_c = np.where(dx != 0.0, 1.0 / np.abs(dx), np.inf)
        delta_r = np.where(dy != 0.0, 1.0 / np.abs(dy), np.inf)
        next_c = np.where(dx > 0.0, (col + 1 - gx) / dx, np.where(dx < 0.0, (col - gx) / dx, np.inf))
        next_r = np.where(dy > 0.0, (row + 1 - gy) / dy, np.where(dy < 0.0, (row - gy) / dy, np.inf))

    entry = np.zeros(n)
    ranges = limit * resolution
    hit = np.zeros(n, dtype=bool)
    hit_cells = np.zeros((n, 2), dtype=np.int64)
    free_parts: list[np.ndarray] = []
    ray_parts: list[np.ndarray] = []
    entry_parts: list[np.ndarray] = []

    active = np.arange(n)
    while active.size:
        r = row[active]
        c = col[active]
        inside = (r >= 0) & (r < rows) & (c >= 0) & (c < cols)

        gone = active[~inside]
        ranges[gone] = np.minimum(entry[gone], limit[gone]) * resolution

        active = active[inside]
        r = r[inside]
        c = c[inside]
        if occupied is not None:
            blocked = occupied[r, c]
        else:
            blocked = np.zeros(active.size, dtype=bool)

        stopped = active[blocked]
        hit[stopped] = True
        ranges[stopped] = entry[stopped] * resolution
        hit_cells[stopped, 0] = r[blocked]
        hit_cells[stopped, 1] = c[blocked]

        active = active[~blocked]
        if collect_cells and active.size:
            free_parts.append(np.column_stack((r[~blocked], c[~blocked])))
            ray_parts.append(active.copy())
            entry_parts.append(entry[active] * resolution)

        # ties step along x first
        along_c = next_c[active] <= next_r[active]
        ac = active[along_c]
        ar = active[~along_c]
        entry[ac] = next_c[ac]
        col[ac] += step_c[ac]
        next_c[ac] += delta_c[ac]
        entry[ar] = next_r[ar]
        row[ar] += step_r[ar]
        next_r[ar] += delta_r[ar]

        beyond = entry[active] > limit[active]
        active = active[~beyond]

    if not collect_cells:
        return RayBundle(ranges, hit)
    if free_parts:
        free_cells = np.concatenate(free_parts)
        free_ids = np.concatenate(ray_parts)
        free_entry = np.concatenate(entry_parts)
    else:
        free_cells, free_ids, free_entry = _EMPTY_CELLS, np.zeros(0, dtype=np.int64), np.zeros(0)
    return RayBundle(ranges, hit, hit_cells[hit], free_cells, free_ids, free_entry)


def endpoint_cells(resolution: float, origin: tuple[float, float], x: float, y: float,
                   angles: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    """(row, col) of the cell just beyond each ray endpoint."""
    reach = ranges + 1e-6 * resolution
    ex = x + reach * np.cos(angles)
    ey = y + reach * np.sin(angles)
    cols = np.floor((ex - origin[0]) / resolution).astype(np.int64)
    rows = np.floor((ey - origin[1]) / resolution).astype(np.int64)
    return np.column_stack((rows, cols))
