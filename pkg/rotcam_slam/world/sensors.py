#!/usr/bin/env python3

"""
Synthetic sensors: laser range finder, the two gyros, the joint encoder,
wheel odometry and the scan-match odometry surrogate.

Noise enters only here; ground truth is never perturbed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rotcam_slam.kinematics.omni import KinematicParams, WheelCommand, body_twist
from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.utility.config import SensorConfig
from rotcam_slam.world.camera import CameraObservation
from rotcam_slam.world.environment import Environment
from rotcam_slam.world.raycast import cast_rays
from rotcam_slam.world.simulator import TrueState


@dataclass(frozen=True)
class InertialReading:
    """Base gyro, camera gyro and encoder ticks sampled at one instant."""
    base_gyro: float
    cam_gyro: float
    encoder_ticks: int
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class OdometryDelta:
    """Relative pose in the previous frame with its sampling covariance."""
    delta: Pose2D
    cov: np.ndarray
    dt: float
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class WheelOdometry:
    """Body-frame twist (vx, vy, dtheta) measured by the wheel encoders."""
    twist: np.ndarray
    cov: np.ndarray
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class SensorFrame:
    """Everything sensed during one control step; ``lrf_ranges`` only on LRF steps."""
    time: float
    camera: CameraObservation
    inertial: InertialReading
    wheels: WheelOdometry
    odom_delta: OdometryDelta | None = None
    lrf_ranges: np.ndarray | None = None


def raycast_lrf(env: Environment, pose: Pose2D, n_rays: int = 360, max_range: float = 12.0) -> np.ndarray:
    """
    Range per ray of a full 360 degree sweep at 1 degree (n_rays) spacing.

    Ray i points at theta + i * 2*pi / n_rays; ranges are clamped to max_range.
    """
    env.require_free_point(pose.x, pose.y)
    angles = pose.theta + np.arange(n_rays) * (2.0 * math.pi / n_rays)
    bundle = cast_rays(env.occupied, env.resolution, env.origin, pose.x, pose.y, angles, max_range)
    return np.minimum(bundle.ranges, max_range)


def encoder_ticks(gamma: float, tick_size: float) -> int:
    """Incremental encoder count of the wrapped joint angle."""
    return int(round(gamma / tick_size))


def synthesize_inertial_and_encoder(state: TrueState, cfg: SensorConfig, rng: np.random.Generator) -> InertialReading:
    """
    Sample both gyros and the joint encoder.

    The base gyro senses dtheta, the camera gyro dtheta + dgamma; draws are
    independent. Two normal draws are always consumed to keep streams aligned.
    """
    noise = rng.normal(0.0, 1.0, size=2) * cfg.sigma_gyro
    dtheta = state.twist.dtheta
    return InertialReading(
        base_gyro=dtheta + float(noise[0]),
        cam_gyro=dtheta + state.dgamma + float(noise[1]),
        encoder_ticks=encoder_ticks(state.gamma, cfg.tick_size),
        time=state.time,
    )


def scan_match_odometry(prev_pose: Pose2D, curr_pose: Pose2D, cfg: SensorConfig, rng: np.random.Generator,
                        dt: float = 0.0, time: float = 0.0) -> OdometryDelta:
    """
    Relative motion from prev_pose to curr_pose perturbed like a scan matcher.

    sigma_xy = a_t * |delta_xy| + b_t and sigma_theta = a_r * |delta_theta| + b_r;
    the reported covariance is exactly the sampling covariance.
    """
    truth = curr_pose.relative_to(prev_pose)
    sigma_xy = cfg.a_t * math.hypot(truth.x, truth.y) + cfg.b_t
    sigma_th = cfg.a_r * abs(truth.theta) + cfg.b_r
    sigmas = np.array([sigma_xy, sigma_xy, sigma_th])
    noise = rng.normal(0.0, 1.0, size=3) * sigmas
    delta = Pose2D(truth.x + float(noise[0]), truth.y + float(noise[1]), truth.theta + float(noise[2]))
    return OdometryDelta(delta, np.diag(sigmas ** 2), dt, time)


def wheel_odometry(command: WheelCommand, params: KinematicParams, cfg: SensorConfig,
                   rng: np.random.Generator, time: float = 0.0) -> WheelOdometry:
    """Body twist realized by the wheel command plus Gaussian noise (sigma_wheel)."""
    twist = body_twist(command, params) + rng.normal(0.0, 1.0, size=3) * cfg.sigma_wheel
    return WheelOdometry(twist, np.eye(3) * cfg.sigma_wheel ** 2, time)
