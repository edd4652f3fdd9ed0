#!/usr/bin/env python3

"""
Frontier detection: free cells next to unknown space, grouped into clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from rotcam_slam.slam.occupancy import CellClass, OccupancyGrid, classify_labels

_FOUR_NEIGHBOURS = ndimage.generate_binary_structure(2, 1)
_EIGHT_NEIGHBOURS = ndimage.generate_binary_structure(2, 2)


@dataclass(frozen=True, eq=False)
class FrontierCluster:
    """An 8-connected group of frontier cells, (N, 2) array of (row, col)."""
    id: int
    cells: np.ndarray

    @property
    def size(self) -> int:
        return int(self.cells.shape[0])

    @property
    def centroid(self) -> np.ndarray:
        """Mean (row, col) of the cells."""
        return self.cells.mean(axis=0)


def frontier_mask(labels: np.ndarray) -> np.ndarray:
    """Free cells 4-adjacent to at least one unknown cell."""
    unknown = labels == CellClass.UNKNOWN
    near_unknown = ndimage.binary_dilation(unknown, structure=_FOUR_NEIGHBOURS)
    return (labels == CellClass.FREE) & near_unknown


def detect_frontiers(grid: OccupancyGrid | np.ndarray, min_size: int = 3, free_threshold: float = 0.35,
                     occupied_threshold: float = 0.65) -> list[FrontierCluster]:
    """
    Frontier clusters of a map, in label scan order.

    :param grid: OccupancyGrid, or an array of CellClass labels
    :param min_size: Clusters with fewer cells are discarded
    :return: Clusters with at least ``min_size`` cells
    """
    labels = grid if isinstance(grid, np.ndarray) else classify_labels(grid, free_threshold, occupied_threshold)
    mask = frontier_mask(labels)
    components, count = ndimage.label(mask, structure=_EIGHT_NEIGHBOURS)
    clusters = []
    for label in range(1, count + 1):
        cells = np.argwhere(components == label)
        if cells.shape[0] >= min_size:
            clusters.append(FrontierCluster(label, cells))
    return clusters
