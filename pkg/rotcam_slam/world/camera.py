#!/usr/bin/env python3

"""
Camera sector model and the 2-D camera observation.

The RGB-D camera is collapsed to a horizontal sector: rays spaced at most
``ray_spacing`` apart over [psi - fov/2, psi + fov/2], each traversing free
cells until the first occupied cell or ``max_depth``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rotcam_slam.utility.exceptions import InvalidParameterError
from rotcam_slam.utility.pure import require_finite
from rotcam_slam.world.environment import Environment
from rotcam_slam.world.raycast import cast_rays


@dataclass(frozen=True)
class CameraModel:
    """Horizontal field of view and sensing depth (d_thr)."""
    fov: float = math.radians(69.4)
    max_depth: float = 4.0
    ray_spacing: float = math.radians(0.5)

    def __post_init__(self) -> None:
        require_finite('camera model', self.fov, self.max_depth, self.ray_spacing)
        if not 0.0 < self.fov < 2.0 * math.pi:
            raise InvalidParameterError('camera.fov must lie in (0, 2*pi)')
        if self.max_depth <= 0:
            raise InvalidParameterError('camera.max_depth must be positive')
        if self.ray_spacing <= 0:
            raise InvalidParameterError('camera.ray_spacing must be positive')

    @property
    def ray_count(self) -> int:
        return int(math.ceil(self.fov / self.ray_spacing)) + 1

    def bearings(self) -> np.ndarray:
        """Ray bearings relative to the optical axis, evenly spread over the fov."""
        return np.linspace(-0.5 * self.fov, 0.5 * self.fov, self.ray_count)

    @classmethod
    def from_dict(cls, data: dict | None) -> CameraModel:
        """Create a CameraModel from the ``camera`` config section (angles in degrees)."""
        if not data:
            return cls()
        return cls(
            fov=math.radians(float(data.get('fov_deg', 69.4))),
            max_depth=float(data.get('max_depth', 4.0)),
            ray_spacing=math.radians(float(data.get('ray_spacing_deg', 0.5))),
        )


@dataclass(frozen=True, eq=False)
class CameraObservation:
    """
    One camera frame.

    ``free_cells`` and ``occupied_cells`` are (N, 2) arrays of (row, col)
    ground-truth cells; ``bearings``, ``ranges`` and ``hits`` describe each
    ray relative to the optical axis so the frame can be re-projected from an
    estimated pose.
    """
    free_cells: np.ndarray
    occupied_cells: np.ndarray
    bearings: np.ndarray
    ranges: np.ndarray
    hits: np.ndarray
    psi: float
    time: float = 0.0

    def cells(self) -> list[tuple[tuple[int, int], bool]]:
        """Observed cells as ((row, col), occupied?) pairs."""
        out = [((int(r), int(c)), False) for r, c in self.free_cells]
        out.extend(((int(r), int(c)), True) for r, c in self.occupied_cells)
        return out


def camera_observation(env: Environment, x: float, y: float, psi: float, cam: CameraModel,
                       time: float = 0.0) -> CameraObservation:
    """
    Observe the environment through the camera sector centred on psi.

    :param env: Ground-truth environment
    :param x: Camera x in meters
    :param y: Camera y in meters
    :param psi: World-frame camera heading
    :param cam: Camera model
    :param time: Frame timestamp
    :return: CameraObservation
    """
    env.require_free_point(x, y)
    bearings = cam.bearings()
    bundle = cast_rays(env.occupied, env.resolution, env.origin, x, y, psi + bearings, cam.max_depth,
                       collect_cells=True)
    free = _unique_cells(bundle.free_cells)
    occupied = _unique_cells(bundle.hit_cells)
    return CameraObservation(free, occupied, bearings, bundle.ranges, bundle.hit, psi, time)


def _unique_cells(cells: np.ndarray) -> np.ndarray:
    if cells.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(cells, axis=0)
