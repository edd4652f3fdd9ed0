#!/usr/bin/env python3

"""
Planar poses and explicit Euler pose integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rotcam_slam.utility.pure import require_finite, require_positive_dt, wrap_angle


@dataclass(frozen=True)
class Pose2D:
    """Planar pose [x, y, theta] in meters and radians."""
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)

    @classmethod
    def from_array(cls, values) -> Pose2D:
        return cls(float(values[0]), float(values[1]), float(values[2]))

    def distance_to(self, other: Pose2D) -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def relative_to(self, origin: Pose2D) -> Pose2D:
        """Express this pose in the frame of ``origin`` (origin^-1 * self)."""
        c, s = math.cos(origin.theta), math.sin(origin.theta)
        dx, dy = self.x - origin.x, self.y - origin.y
        return Pose2D(c * dx + s * dy, -s * dx + c * dy, wrap_angle(self.theta - origin.theta))

    def compose(self, delta: Pose2D) -> Pose2D:
        """Apply a relative pose expressed in this pose's frame (self * delta)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            self.x + c * delta.x - s * delta.y,
            self.y + s * delta.x + c * delta.y,
            wrap_angle(self.theta + delta.theta),
        )


def integrate_pose(pose: Pose2D, velocity, gamma: float, gamma_rate: float, dt: float) -> tuple[Pose2D, float]:
    """
    Advance a pose and the camera joint angle by one explicit Euler step.

    The velocity is expressed in the global frame (vx, vy, dtheta).

    :param pose: Current pose
    :param velocity: GlobalVelocity (or anything with vx, vy, dtheta)
    :param gamma: Camera yaw relative to the base
    :param gamma_rate: Relative camera yaw rate
    :param dt: Time step, must be positive
    :return: (new pose, new gamma) with both angles wrapped to (-pi, pi]
    """
    dt = require_positive_dt(dt)
    require_finite('pose', pose.x, pose.y, pose.theta, gamma)
    require_finite('velocity', velocity.vx, velocity.vy, velocity.dtheta, gamma_rate)
    new_pose = Pose2D(
        pose.x + velocity.vx * dt,
        pose.y + velocity.vy * dt,
        wrap_angle(pose.theta + velocity.dtheta * dt),
    )
    return new_pose, wrap_angle(gamma + gamma_rate * dt)
