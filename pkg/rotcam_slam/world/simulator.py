#!/usr/bin/env python3

"""
Ground-truth propagation of the base and camera joint under wheel commands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from rotcam_slam.kinematics.omni import (
    ExtendedVelocity,
    GlobalVelocity,
    KinematicParams,
    WheelCommand,
    accumulate_wheel_rotation,
    extended_wheel_speeds,
    global_velocity,
    joint_rate,
)
from rotcam_slam.kinematics.pose import Pose2D, integrate_pose
from rotcam_slam.utility.exceptions import InvalidInputError
from rotcam_slam.utility.logging_config import Subject, get_sim_logger
from rotcam_slam.utility.pure import require_finite, require_positive_dt, wrap_angle
from rotcam_slam.world.environment import DEFAULT_ROBOT_RADIUS, Environment


@dataclass(frozen=True)
class TrueState:
    """True base pose, camera joint angle, realized rates and time."""
    pose: Pose2D = field(default_factory=Pose2D)
    gamma: float = 0.0
    twist: GlobalVelocity = field(default_factory=GlobalVelocity)
    dgamma: float = 0.0
    time: float = 0.0

    @property
    def psi(self) -> float:
        """World-frame camera heading."""
        return wrap_angle(self.pose.theta + self.gamma)


class World:
    """
    One simulated robot in one environment.

    Wheel commands are held constant over a control step and integrated with
    explicit Euler substeps of ``sim_dt``. Translation that would make the
    robot disk overlap an obstacle is dropped for that substep, rotation is
    still applied, so the robot halts at the last contact-free pose.
    """

    def __init__(self, env: Environment, params: KinematicParams, sim_dt: float = 0.01,
                 robot_radius: float = DEFAULT_ROBOT_RADIUS, gamma: float = 0.0, trial: str | None = None):
        self.env = env
        self.params = params
        self.sim_dt = require_positive_dt(sim_dt)
        self.robot_radius = robot_radius
        self.state = TrueState(env.start, wrap_angle(gamma))
        self.wheel_rotation = 0.0
        self.robot_rotation = 0.0
        self.camera_rotation = 0.0
        self.path_length = 0.0
        self.in_contact = False
        self.contacts = 0
        self.logger = get_sim_logger(Subject.WORLD, trial)
        if env.collides(env.start.x, env.start.y, robot_radius):
            raise InvalidInputError('Start pose overlaps an obstacle')

    def step(self, command: WheelCommand | ExtendedVelocity, dt: float) -> TrueState:
        """Advance the world by dt (see ``step_world``)."""
        dt = require_positive_dt(dt)
        if isinstance(command, ExtendedVelocity):
            command = extended_wheel_speeds(self.state.pose.theta, command, self.params)
        require_finite('wheel command', command.wheels, 0.0 if command.joint is None else command.joint)
        if not command.within_limits(self.params):
            raise InvalidInputError(f'Wheel command {command.wheels} exceeds actuator limits')

        substeps = max(1, int(round(dt / self.sim_dt)))
        h = dt / substeps
        pose, gamma = self.state.pose, self.state.gamma
        contact = False
        realized = GlobalVelocity()
        dgamma = 0.0
        for _ in range(substeps):
            velocity = global_velocity(pose.theta, command, self.params)
            dgamma = joint_rate(command, velocity.dtheta, self.params)
            moved, gamma = integrate_pose(pose, velocity, gamma, dgamma, h)
            if (moved.x, moved.y) != (pose.x, pose.y) and self.env.collides(moved.x, moved.y, self.robot_radius):
                contact = True
                moved = Pose2D(pose.x, pose.y, moved.theta)
                realized = GlobalVelocity(0.0, 0.0, velocity.dtheta)
            else:
                realized = velocity
            self.path_length += math.hypot(moved.x - pose.x, moved.y - pose.y)
            self.robot_rotation += abs(velocity.dtheta) * h
            self.camera_rotation += abs(dgamma) * h
            pose = moved

        self.wheel_rotation = accumulate_wheel_rotation(command, dt, self.wheel_rotation)
        if contact:
            self.contacts += 1
            if not self.in_contact:
                self.logger.warning(f'Contact at ({pose.x:.2f}, {pose.y:.2f}), t={self.state.time + dt:.1f}s')
        self.in_contact = contact
        self.state = TrueState(pose, gamma, realized, dgamma, self.state.time + dt)
        return self.state


def step_world(world: World, command: WheelCommand | ExtendedVelocity, dt: float) -> TrueState:
    """
    Advance the true state under a wheel command (or an extended velocity,
    converted with the true heading).

    :param world: World to mutate
    :param command: WheelCommand or ExtendedVelocity
    :param dt: Step length, must be positive
    :return: New TrueState
    """
    return world.step(command, dt)
