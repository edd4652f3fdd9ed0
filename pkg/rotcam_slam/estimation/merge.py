#!/usr/bin/env python3

"""
Composition of the robot and camera estimates into the merged camera pose.

    psi = wrap(theta + gamma),  dpsi = dtheta + dgamma
    var(psi) = var(theta) + var(gamma),  var(dpsi) = var(dtheta) + var(dgamma)

Robot and camera are treated as independent: the camera contributes to the
psi and dpsi diagonal entries only, every other entry is the robot's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rotcam_slam.estimation.gaussian import GaussianEstimate, check_psd
from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.utility.exceptions import EstimationError, TimestampMismatchError
from rotcam_slam.utility.pure import require_finite, wrap_angle

SYNC_TOLERANCE = 0.005
_XY_ROWS = np.array([
    [1, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0],
], dtype=float)


@dataclass(frozen=True, eq=False)
class MergedState:
    """
    Camera pose estimate [x, y, psi, vx, vy, dpsi] with 6x6 covariance.

    vx, vy are the base body-frame velocities copied from the robot filter;
    ``theta`` and ``gamma`` keep the components psi was composed from.
    """
    mean: np.ndarray
    cov: np.ndarray
    theta: float
    gamma: float
    time: float = 0.0

    @property
    def x(self) -> float:
        return float(self.mean[0])

    @property
    def y(self) -> float:
        return float(self.mean[1])

    @property
    def psi(self) -> float:
        return float(self.mean[2])

    @property
    def dpsi(self) -> float:
        return float(self.mean[5])

    @property
    def pose(self) -> Pose2D:
        """Camera pose (x, y, psi)."""
        return Pose2D(self.x, self.y, self.psi)


def camera_as_ground_truth(angle: float, rate: float = 0.0, time: float = 0.0) -> GaussianEstimate:
    """Zero-variance camera estimate; composing it leaves the robot uncertainty unchanged."""
    return GaussianEstimate(np.array([wrap_angle(angle), rate]), np.zeros((2, 2)), time)


def merge_states(robot: GaussianEstimate, camera: GaussianEstimate,
                 tolerance: float = SYNC_TOLERANCE, previous: GaussianEstimate | None = None) -> MergedState:
    """
    Compose the robot estimate [x, y, theta, vx, vy, dtheta] with the camera
    estimate [gamma, dgamma].

    :param previous: Earlier camera estimate; when it and ``camera`` bracket the
        robot timestamp the camera is interpolated to it
    :raise TimestampMismatchError: If the estimates are further apart than tolerance
    """
    if previous is not None and previous.time <= robot.time <= camera.time:
        camera = interpolate_estimate(previous, camera, robot.time)
    if abs(robot.time - camera.time) > tolerance:
        raise TimestampMismatchError(
            f'Robot estimate at {robot.time:.3f}s and camera estimate at {camera.time:.3f}s are not synchronized')
    theta = float(robot.mean[2])
    gamma = float(camera.mean[0])
    mean = robot.mean.copy()
    mean[2] = wrap_angle(theta + gamma)
    mean[5] = robot.mean[5] + camera.mean[1]
    cov = robot.cov.copy()
    cov[2, 2] = robot.cov[2, 2] + camera.cov[0, 0]
    cov[5, 5] = robot.cov[5, 5] + camera.cov[1, 1]
    return MergedState(mean, cov, theta, gamma, robot.time)


def interpolate_estimate(before: GaussianEstimate, after: GaussianEstimate, time: float,
                         angular: tuple[int, ...] = (0,)) -> GaussianEstimate:
    """
    Estimate at ``time`` between two samples: linear on the mean (angles along
    the short arc), nearest sample's covariance.
    """
    span = after.time - before.time
    if span <= 0:
        return before.at(time)
    w = min(max((time - before.time) / span, 0.0), 1.0)
    diff = after.mean - before.mean
    for i in angular:
        diff[i] = wrap_angle(diff[i])
    mean = before.mean + w * diff
    for i in angular:
        mean[i] = wrap_angle(mean[i])
    cov = before.cov if w < 0.5 else after.cov
    return GaussianEstimate(mean, cov.copy(), time)


def fuse_loop_closure_xy(est: GaussianEstimate, corrected_xy, cov_xy) -> GaussianEstimate:
    """
    Refine x and y with a position from the optimized pose graph.

    The gain row of theta is zeroed and the covariance follows the Joseph
    form for that gain, so the theta mean and variance stay as they were.
    The velocities still move through their correlation with x and y.

    :raise EstimationError: If the innovation covariance is singular
    """
    z = np.asarray(corrected_xy, dtype=float).reshape(2)
    R = check_psd(np.asarray(cov_xy, dtype=float), 'loop closure covariance')
    require_finite('loop closure position', z)
    P = est.cov
    S = _XY_ROWS @ P @ _XY_ROWS.T + R
    try:
        K = np.linalg.solve(S, _XY_ROWS @ P).T
    except np.linalg.LinAlgError as e:
        raise EstimationError('Loop closure innovation covariance is singular') from e
    K[2, :] = 0.0
    mean = est.mean + K @ (z - _XY_ROWS @ est.mean)
    I_KH = np.eye(est.dim) - K @ _XY_ROWS
    cov = I_KH @ P @ I_KH.T + K @ R @ K.T
    return GaussianEstimate(mean, check_psd(cov, 'fused covariance'), est.time)
