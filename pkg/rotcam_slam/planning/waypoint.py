#!/usr/bin/env python3

"""
Next-best-view selection over frontier candidates.

Each frontier cluster yields one candidate position, the reachable cell
closest to its centroid. At every candidate the camera sector is evaluated
for a fixed set of headings; the utility of a heading is the number of
distinct unknown cells visible inside the sector without passing through an
occupied cell. The candidate pose maximizing utility per meter of path wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from rotcam_slam.estimation.merge import MergedState
from rotcam_slam.planning.frontier import FrontierCluster
from rotcam_slam.planning.paths import DistanceField, cells_to_points, distance_field
from rotcam_slam.slam.occupancy import CellClass, OccupancyGrid, classify_labels
from rotcam_slam.utility.config import PlannerConfig
from rotcam_slam.utility.logging_config import Subject, get_sim_logger
from rotcam_slam.utility.pure import wrap_angle
from rotcam_slam.world.camera import CameraModel
from rotcam_slam.world.raycast import cast_rays


@dataclass(frozen=True, eq=False)
class Waypoint:
    """Goal pose for the controller with the grid path leading to it."""
    x: float
    y: float
    psi: float
    utility: int
    path: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    path_length: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


def candidate_headings(count: int = 36) -> np.ndarray:
    """Evenly spaced headings in (-pi, pi], starting at 0."""
    return wrap_angle(np.arange(count) * (2.0 * math.pi / count))


def heading_utilities(labels: np.ndarray, resolution: float, origin: tuple[float, float], x: float, y: float,
                      cam: CameraModel, headings: np.ndarray, ray_step: float = math.radians(1.0)) -> np.ndarray:
    """
    Unknown cells visible from (x, y) for each camera heading.

    :param labels: CellClass labels of the current map
    :param x: Candidate position x
    :param y: Candidate position y
    :param cam: Camera sector (fov, max depth)
    :param headings: Headings to evaluate
    :param ray_step: Angular spacing of the probe rays
    :return: Integer utility per heading
    """
    n_rays = max(1, int(round(2.0 * math.pi / ray_step)))
    angles = np.arange(n_rays) * (2.0 * math.pi / n_rays)
    bundle = cast_rays(labels == CellClass.OCCUPIED, resolution, origin, x, y, angles, cam.max_depth,
                       collect_cells=True)
    cells = bundle.free_cells
    utilities = np.zeros(len(headings), dtype=np.int64)
    if cells.shape[0] == 0:
        return utilities
    unknown = labels[cells[:, 0], cells[:, 1]] == CellClass.UNKNOWN
    linear = (cells[:, 0] * labels.shape[1] + cells[:, 1])[unknown]
    ray_ids = bundle.free_ray_ids[unknown]
    offsets = np.abs(wrap_angle(angles[None, :] - np.asarray(headings)[:, None]))
    in_sector = offsets <= 0.5 * cam.fov + 1e-12
    for k in range(len(headings)):
        utilities[k] = np.unique(linear[in_sector[k, ray_ids]]).size
    return utilities


def _candidate_cells(clusters: list[FrontierCluster], reachable: np.ndarray, limit: int) -> list[tuple[int, int]]:
    """Reachable cell nearest each cluster centroid, largest clusters first, without duplicates."""
    ordered = sorted(clusters, key=lambda c: (-c.size, c.id))[:limit]
    _, nearest = ndimage.distance_transform_edt(~reachable, return_indices=True)
    rows, cols = reachable.shape
    cells: list[tuple[int, int]] = []
    for cluster in ordered:
        r, c = np.round(cluster.centroid).astype(int)
        r = int(np.clip(r, 0, rows - 1))
        c = int(np.clip(c, 0, cols - 1))
        cell = (int(nearest[0, r, c]), int(nearest[1, r, c]))
        if cell not in cells:
            cells.append(cell)
    return cells


def select_waypoint(
    frontiers: list[FrontierCluster],
    state: MergedState,
    grid: OccupancyGrid,
    cam: CameraModel,
    cfg: PlannerConfig | None = None,
    robot_radius: float = 0.2,
    labels: np.ndarray | None = None,
    reach: DistanceField | None = None,
    trial: str | None = None,
) -> Waypoint | None:
    """
    Pick the frontier pose with the best utility per meter of path.

    Ties in score go to the heading closest to the current camera heading.

    :param frontiers: Frontier clusters of the current map
    :param state: Current merged estimate (x, y, psi)
    :param grid: Current occupancy map
    :param cam: Camera model used for the utility sector
    :param cfg: Planner settings
    :param robot_radius: Footprint used to inflate obstacles
    :param labels: Precomputed CellClass labels of ``grid``
    :param reach: Precomputed distance field from the robot cell
    :return: Waypoint, or None when no reachable frontier yields any utility
    """
    cfg = cfg or PlannerConfig()
    logger = get_sim_logger(Subject.PLANNER, trial)
    if not frontiers:
        return None
    if labels is None:
        labels = classify_labels(grid)
    if reach is None:
        start = grid.world_to_cell(state.x, state.y)
        reach = distance_field(labels, start, grid.resolution, robot_radius, cfg.inflation_extra_cells)
    reachable = reach.reachable()
    if not reachable.any():
        logger.info('No reachable cell around the robot')
        return None

    headings = candidate_headings(cfg.headings)
    best: tuple[float, float, tuple[int, int], int, int] | None = None
    for cell in _candidate_cells(frontiers, reachable, cfg.max_candidates):
        x, y = grid.cell_center(*cell)
        utilities = heading_utilities(labels, grid.resolution, grid.origin, x, y, cam, headings,
                                      cfg.utility_ray_step)
        length = max(reach.distance(cell), grid.resolution)
        turns = np.abs(wrap_angle(headings - state.psi))
        for k in range(len(headings)):
            if utilities[k] == 0:
                continue
            score = utilities[k] / length
            if best is None or score > best[0] or (score == best[0] and turns[k] < best[1]):
                best = (score, float(turns[k]), cell, k, int(utilities[k]))

    if best is None:
        logger.info('No frontier candidate sees unknown space')
        return None
    _, _, cell, k, utility = best
    x, y = grid.cell_center(*cell)
    path = cells_to_points(reach.path_to(cell), grid.resolution, grid.origin)
    waypoint = Waypoint(x, y, float(headings[k]), utility, path, reach.distance(cell))
    logger.debug(f'Waypoint ({x:.2f}, {y:.2f}, {math.degrees(waypoint.psi):.0f} deg), '
                 f'utility {utility}, path {waypoint.path_length:.2f} m')
    return waypoint
