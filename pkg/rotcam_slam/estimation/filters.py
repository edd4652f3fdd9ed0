#!/usr/bin/env python3

"""
The two filters of the dual EKF.

Robot filter state:  [x, y, theta, vx_body, vy_body, dtheta]
Camera filter state: [gamma, dgamma]

The robot filter fuses wheel odometry and scan-match deltas (as body-frame
velocity measurements) and the base gyro. The camera filter fuses the joint
encoder angle and the differential IMU rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rotcam_slam.estimation.gaussian import GaussianEstimate, ekf_predict, ekf_update
from rotcam_slam.estimation.merge import fuse_loop_closure_xy
from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.utility.config import EstimationConfig, SensorConfig
from rotcam_slam.utility.exceptions import TimestampMismatchError
from rotcam_slam.utility.pure import wrap_angle
from rotcam_slam.world.sensors import InertialReading, OdometryDelta, WheelOdometry

DIFF_IMU_VARIANCE = 0.01
SYNC_TOLERANCE = 0.005

_VELOCITY_ROWS = np.array([
    [0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 1],
], dtype=float)
_YAW_RATE_ROW = np.array([[0, 0, 0, 0, 0, 1]], dtype=float)
_GAMMA_ROW = np.array([[1.0, 0.0]])
_GAMMA_RATE_ROW = np.array([[0.0, 1.0]])


@dataclass(frozen=True)
class DifferentialImuMeasurement:
    """Relative joint rate from the two gyros; the variance is fixed."""
    rel_rate: float
    variance: float = DIFF_IMU_VARIANCE
    time: float = 0.0


def differential_imu(base_gyro: float, cam_gyro: float, base_time: float = 0.0, cam_time: float = 0.0,
                     tolerance: float = SYNC_TOLERANCE,
                     variance: float = DIFF_IMU_VARIANCE) -> DifferentialImuMeasurement:
    """
    Subtract the base gyro from the camera gyro.

    :raise TimestampMismatchError: If the two samples are further apart than tolerance
    """
    if abs(cam_time - base_time) > tolerance:
        raise TimestampMismatchError(
            f'Gyro samples {abs(cam_time - base_time) * 1000:.1f} ms apart (tolerance {tolerance * 1000:.1f} ms)')
    return DifferentialImuMeasurement(cam_gyro - base_gyro, variance, cam_time)


def scan_match_twist(delta: Pose2D, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Constant body twist (vx, vy, dtheta) that moves the base by ``delta``
    within ``dt``, and its Jacobian with respect to (dx, dy, dtheta).

    Along a constant-twist arc the displacement is dt * sinc(h) * R(h) v with
    h = dtheta * dt / 2, so v = R(-h) d / (dt * sinc(h)).
    """
    half = 0.5 * delta.theta
    c, s = math.cos(half), math.sin(half)
    if abs(half) < 1e-6:
        sinc, dsinc = 1.0, -half / 3.0
    else:
        sinc = s / half
        dsinc = (half * c - s) / (half * half)
    rot = np.array([[c, s], [-s, c]])
    drot = np.array([[-s, c], [-c, -s]])
    d = np.array([delta.x, delta.y])
    v = rot @ d / (dt * sinc)
    dv_dhalf = (drot @ d / sinc - rot @ d * dsinc / (sinc * sinc)) / dt
    jac = np.zeros((3, 3))
    jac[:2, :2] = rot / (dt * sinc)
    jac[:2, 2] = 0.5 * dv_dhalf
    jac[2, 2] = 1.0 / dt
    return np.array([v[0], v[1], delta.theta / dt]), jac


class UnicycleModel:
    """
    Constant-velocity unicycle with lateral velocity.

    x' = x + (vx cos(theta) - vy sin(theta)) dt
    y' = y + (vx sin(theta) + vy cos(theta)) dt
    theta' = theta + dtheta dt; velocities follow a random walk.
    """

    def __init__(self, q_position: float = 1e-6, q_velocity: float = 1.0, q_yaw_rate: float = 1.0):
        self.q_position = q_position
        self.q_velocity = q_velocity
        self.q_yaw_rate = q_yaw_rate

    def propagate(self, mean: np.ndarray, dt: float) -> np.ndarray:
        x, y, th, vx, vy, w = mean
        c, s = math.cos(th), math.sin(th)
        return np.array([
            x + (vx * c - vy * s) * dt,
            y + (vx * s + vy * c) * dt,
            wrap_angle(th + w * dt),
            vx, vy, w,
        ])

    def jacobian(self, mean: np.ndarray, dt: float) -> np.ndarray:
        _, _, th, vx, vy, _ = mean
        c, s = math.cos(th), math.sin(th)
        F = np.eye(6)
        F[0, 2] = (-vx * s - vy * c) * dt
        F[0, 3] = c * dt
        F[0, 4] = -s * dt
        F[1, 2] = (vx * c - vy * s) * dt
        F[1, 3] = s * dt
        F[1, 4] = c * dt
        F[2, 5] = dt
        return F

    def noise(self, mean: np.ndarray, dt: float) -> np.ndarray:
        q = [self.q_position, self.q_position, self.q_position, self.q_velocity, self.q_velocity, self.q_yaw_rate]
        return np.diag(q) * dt


class CameraJointModel:
    """gamma' = gamma + dgamma dt; dgamma follows a random walk."""

    def __init__(self, q_rate: float = 1.0):
        self.q_rate = q_rate

    def propagate(self, mean: np.ndarray, dt: float) -> np.ndarray:
        return np.array([wrap_angle(mean[0] + mean[1] * dt), mean[1]])

    def jacobian(self, mean: np.ndarray, dt: float) -> np.ndarray:
        return np.array([[1.0, dt], [0.0, 1.0]])

    def noise(self, mean: np.ndarray, dt: float) -> np.ndarray:
        return np.diag([0.0, self.q_rate * dt])


class RobotFilter:
    """EKF over the base pose and body-frame twist."""

    def __init__(self, start: Pose2D, cfg: EstimationConfig, time: float = 0.0):
        self.model = UnicycleModel(cfg.q_position, cfg.q_velocity, cfg.q_yaw_rate)
        cov = np.diag([
            cfg.initial_sigma_xy ** 2, cfg.initial_sigma_xy ** 2, cfg.initial_sigma_theta ** 2,
            cfg.initial_sigma_velocity ** 2, cfg.initial_sigma_velocity ** 2, cfg.initial_sigma_velocity ** 2,
        ])
        mean = np.array([start.x, start.y, start.theta, 0.0, 0.0, 0.0])
        self.estimate = GaussianEstimate(mean, cov, time)

    @property
    def pose(self) -> Pose2D:
        return Pose2D.from_array(self.estimate.mean[:3])

    def predict(self, dt: float) -> GaussianEstimate:
        self.estimate = ekf_predict(self.estimate, self.model, dt)
        return self.estimate

    def update_wheels(self, odom: WheelOdometry) -> GaussianEstimate:
        self.estimate = ekf_update(self.estimate, odom.twist, _VELOCITY_ROWS, odom.cov)
        return self.estimate

    def update_gyro(self, rate: float, variance: float) -> GaussianEstimate:
        self.estimate = ekf_update(self.estimate, [rate], _YAW_RATE_ROW, [[variance]])
        return self.estimate

    def update_scan_match(self, odom: OdometryDelta) -> GaussianEstimate:
        """Fuse a scan-match delta as the constant body twist that explains it."""
        z, jac = scan_match_twist(odom.delta, odom.dt)
        self.estimate = ekf_update(self.estimate, z, _VELOCITY_ROWS, jac @ odom.cov @ jac.T)
        return self.estimate

    def fuse_xy(self, xy, cov_xy) -> GaussianEstimate:
        self.estimate = fuse_loop_closure_xy(self.estimate, xy, cov_xy)
        return self.estimate


class CameraFilter:
    """EKF over the relative camera yaw and its rate."""

    def __init__(self, gamma: float, cfg: EstimationConfig, sensors: SensorConfig, time: float = 0.0):
        self.model = CameraJointModel(cfg.q_camera_rate)
        self.tick_size = sensors.tick_size
        self.encoder_variance = sensors.encoder_variance
        self.diff_imu_variance = cfg.diff_imu_variance
        self.sync_tolerance = cfg.sync_tolerance
        cov = np.diag([self.encoder_variance, cfg.initial_sigma_velocity ** 2])
        self.estimate = GaussianEstimate(np.array([wrap_angle(gamma), 0.0]), cov, time)

    def predict(self, dt: float) -> GaussianEstimate:
        self.estimate = ekf_predict(self.estimate, self.model, dt)
        return self.estimate

    def update_encoder(self, ticks: int) -> GaussianEstimate:
        angle = wrap_angle(ticks * self.tick_size)
        self.estimate = ekf_update(self.estimate, [angle], _GAMMA_ROW, [[self.encoder_variance]],
                                   angular=(0,), wrap_state=(0,))
        return self.estimate

    def update_rate(self, measurement: DifferentialImuMeasurement) -> GaussianEstimate:
        self.estimate = ekf_update(self.estimate, [measurement.rel_rate], _GAMMA_RATE_ROW,
                                   [[measurement.variance]])
        return self.estimate

    def update_inertial(self, reading: InertialReading) -> GaussianEstimate:
        """Encoder angle then differential IMU rate from one synchronized reading."""
        self.update_encoder(reading.encoder_ticks)
        rate = differential_imu(reading.base_gyro, reading.cam_gyro, reading.time, reading.time,
                                self.sync_tolerance, self.diff_imu_variance)
        return self.update_rate(rate)
