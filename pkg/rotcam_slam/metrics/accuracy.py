#!/usr/bin/env python3

"""
Map accuracy against the ground-truth labeling of an environment.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from rotcam_slam.slam.occupancy import CellClass, OccupancyGrid, classify_labels
from rotcam_slam.utility.exceptions import MetricError
from rotcam_slam.world.environment import Environment

_FOUR_NEIGHBOURS = ndimage.generate_binary_structure(2, 1)
_EIGHT_NEIGHBOURS = ndimage.generate_binary_structure(2, 2)


def ground_truth_labels(env: Environment) -> np.ndarray:
    """
    Labels a complete exploration from the start pose could produce.

    Free: the free component containing the start cell. Occupied: obstacle
    cells 8-adjacent to that component. Everything else stays unknown.
    """
    free = env.free
    components, _ = ndimage.label(free, structure=_FOUR_NEIGHBOURS)
    start = env.world_to_cell(env.start.x, env.start.y)
    region = components == components[start]
    walls = ndimage.binary_dilation(region, structure=_EIGHT_NEIGHBOURS) & env.occupied
    labels = np.full(env.shape, CellClass.UNKNOWN, dtype=np.int8)
    labels[region] = CellClass.FREE
    labels[walls] = CellClass.OCCUPIED
    return labels


def _as_labels(grid: OccupancyGrid | np.ndarray, free_threshold: float, occupied_threshold: float) -> np.ndarray:
    if isinstance(grid, OccupancyGrid):
        return classify_labels(grid, free_threshold, occupied_threshold)
    return np.asarray(grid)


def class_recalls(est: np.ndarray, gt: np.ndarray) -> dict[CellClass, float | None]:
    """Recall per class; None for a class absent from the ground truth."""
    recalls: dict[CellClass, float | None] = {}
    for cls in CellClass:
        truth = gt == cls
        total = int(truth.sum())
        recalls[cls] = None if total == 0 else int((est[truth] == cls).sum()) / total
    return recalls


def balanced_accuracy(est_grid: OccupancyGrid | np.ndarray, gt_grid: OccupancyGrid | np.ndarray,
                      free_threshold: float = 0.35, occupied_threshold: float = 0.65) -> float:
    """
    Mean per-class recall over free, occupied and unknown.

    :param est_grid: Estimated map, as OccupancyGrid or CellClass labels
    :param gt_grid: Ground truth, as OccupancyGrid or CellClass labels
    :raise MetricError: If the grids have different shapes or resolutions
    :return: Balanced accuracy in [0, 1]
    """
    if (isinstance(est_grid, OccupancyGrid) and isinstance(gt_grid, OccupancyGrid)
            and (est_grid.resolution != gt_grid.resolution or est_grid.origin != gt_grid.origin)):
        raise MetricError('Maps are not aligned: resolution or origin differ')
    est = _as_labels(est_grid, free_threshold, occupied_threshold)
    gt = _as_labels(gt_grid, free_threshold, occupied_threshold)
    if est.shape != gt.shape:
        raise MetricError(f'Maps are not aligned: shapes {est.shape} and {gt.shape}')
    present = [r for r in class_recalls(est, gt).values() if r is not None]
    if not present:
        raise MetricError('Ground truth map is empty')
    return float(sum(present) / len(present))
