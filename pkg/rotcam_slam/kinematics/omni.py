#!/usr/bin/env python3

"""
Wheel-speed maps for the three-wheel omnidirectional base and the camera joint.

    omega  = G  · S_L  · T_R(theta_G)  · xdot_G               (base)
    omega' = G' · S_L' · T_R'(theta_G) · [xdot_G, dgamma]      (base + joint)

T_R rotates global velocities into the robot frame, S_L maps the body twist to
each wheel's rim speed, G = diag(1/r) converts rim speed to wheel rate. The
extended form adds one row/column: the joint rate is the sum of the base and
relative camera rates, scaled by the joint gear ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rotcam_slam.utility.exceptions import InvalidParameterError
from rotcam_slam.utility.pure import require_finite, require_positive_dt

DEFAULT_WHEEL_ANGLES = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)


@dataclass(frozen=True)
class KinematicParams:
    """Geometry of the base and the camera joint."""
    wheel_center_distance: float = 0.135
    wheel_radius: float = 0.04
    wheel_angles: tuple[float, float, float] = DEFAULT_WHEEL_ANGLES
    joint_gear_ratio: float = 1.0
    wheel_limit: float = 40.0
    joint_limit: float = 10.0

    def __post_init__(self) -> None:
        require_finite('kinematic parameters', self.wheel_center_distance, self.wheel_radius,
                       self.joint_gear_ratio, *self.wheel_angles)
        if self.wheel_center_distance <= 0:
            raise InvalidParameterError('kin.D must be positive')
        if self.wheel_radius <= 0:
            raise InvalidParameterError('kin.r must be positive')
        if len(self.wheel_angles) != 3:
            raise InvalidParameterError('kin.alpha needs exactly three wheel angles')
        if self.joint_gear_ratio == 0:
            raise InvalidParameterError('kin.joint_gear must be non-zero')
        wrapped = [a % (2.0 * math.pi) for a in self.wheel_angles]
        for i in range(3):
            for j in range(i + 1, 3):
                gap = abs(wrapped[i] - wrapped[j])
                if min(gap, 2.0 * math.pi - gap) < 1e-9:
                    raise InvalidParameterError('kin.alpha wheel angles must be distinct modulo 2*pi')
        if np.linalg.cond(wheel_matrix(self)) > 1e12:
            raise InvalidParameterError('Wheel matrix S_L is singular for the given wheel angles')

    @property
    def D(self) -> float:  # noqa: N802
        return self.wheel_center_distance

    @property
    def r(self) -> float:
        return self.wheel_radius

    @classmethod
    def from_dict(cls, data: dict | None) -> KinematicParams:
        """Create KinematicParams from the ``kin`` config section."""
        if not data:
            return cls()
        alpha = data.get('alpha')
        return cls(
            wheel_center_distance=float(data.get('D', 0.135)),
            wheel_radius=float(data.get('r', 0.04)),
            wheel_angles=tuple(float(a) for a in alpha) if alpha is not None else DEFAULT_WHEEL_ANGLES,
            joint_gear_ratio=float(data.get('joint_gear', 1.0)),
            wheel_limit=float(data.get('wheel_limit', 40.0)),
            joint_limit=float(data.get('joint_limit', 10.0)),
        )


@dataclass(frozen=True)
class GlobalVelocity:
    """Base velocity in the global frame (xdot_G)."""
    vx: float = 0.0
    vy: float = 0.0
    dtheta: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.dtheta], dtype=float)


@dataclass(frozen=True)
class ExtendedVelocity:
    """Base velocity plus the relative camera rate (xdot'_G)."""
    vx: float = 0.0
    vy: float = 0.0
    dtheta: float = 0.0
    dgamma: float = 0.0

    @property
    def base(self) -> GlobalVelocity:
        return GlobalVelocity(self.vx, self.vy, self.dtheta)

    @property
    def heading_rate(self) -> float:
        """World-frame camera rate dpsi = dtheta + dgamma."""
        return self.dtheta + self.dgamma

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.dtheta, self.dgamma], dtype=float)

    @classmethod
    def from_array(cls, values) -> ExtendedVelocity:
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]))


@dataclass(frozen=True, eq=False)
class WheelCommand:
    """Wheel rates of the base and, in the extended form, the camera joint."""
    wheels: np.ndarray = field(default_factory=lambda: np.zeros(3))
    joint: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, 'wheels', np.asarray(self.wheels, dtype=float).reshape(3))

    def within_limits(self, params: KinematicParams) -> bool:
        if np.any(np.abs(self.wheels) > params.wheel_limit):
            return False
        return self.joint is None or abs(self.joint) <= params.joint_limit


def rotation_matrix(theta: float) -> np.ndarray:
    """T_R: global frame to robot frame."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([
        [c, s, 0.0],
        [-s, c, 0.0],
        [0.0, 0.0, 1.0],
    ])


def wheel_matrix(params: KinematicParams) -> np.ndarray:
    """S_L: body twist to wheel rim speeds."""
    rows = [[-math.sin(a), math.cos(a), params.wheel_center_distance] for a in params.wheel_angles]
    return np.array(rows)


def gear_matrix(params: KinematicParams) -> np.ndarray:
    """G = diag(1/r)."""
    return np.eye(3) / params.wheel_radius


def base_map(theta: float, params: KinematicParams) -> np.ndarray:
    """Full 3x3 map G · S_L · T_R(theta)."""
    return gear_matrix(params) @ wheel_matrix(params) @ rotation_matrix(theta)


def extended_map(theta: float, params: KinematicParams) -> np.ndarray:
    """Full 4x4 map G' · S_L' · T_R'(theta)."""
    t_ext = np.zeros((4, 4))
    t_ext[:3, :3] = rotation_matrix(theta)
    t_ext[3, 2] = 1.0
    t_ext[3, 3] = 1.0
    s_ext = np.zeros((4, 4))
    s_ext[:3, :3] = wheel_matrix(params)
    s_ext[3, 3] = 1.0
    g_ext = np.zeros((4, 4))
    g_ext[:3, :3] = gear_matrix(params)
    g_ext[3, 3] = params.joint_gear_ratio
    return g_ext @ s_ext @ t_ext


def wheel_speeds(theta: float, velocity: GlobalVelocity, params: KinematicParams) -> WheelCommand:
    """
    Wheel rates for a global-frame base velocity.

    :param theta: Base heading theta_G
    :param velocity: Global velocity (vx, vy, dtheta)
    :param params: Kinematic parameters
    :return: WheelCommand without a joint entry
    """
    require_finite('heading', theta)
    require_finite('velocity', velocity.vx, velocity.vy, velocity.dtheta)
    omega = base_map(theta, params) @ velocity.as_array()
    return WheelCommand(omega)


def extended_wheel_speeds(theta: float, velocity: ExtendedVelocity, params: KinematicParams) -> WheelCommand:
    """
    Wheel and joint rates for the extended velocity.

    The base rows do not depend on dgamma, so they are computed with the same
    3x3 product as ``wheel_speeds`` and agree with it exactly.
    """
    require_finite('heading', theta)
    require_finite('velocity', velocity.vx, velocity.vy, velocity.dtheta, velocity.dgamma)
    base = wheel_speeds(theta, velocity.base, params)
    joint = params.joint_gear_ratio * (velocity.dtheta + velocity.dgamma)
    return WheelCommand(base.wheels, joint)


def body_twist(command: WheelCommand, params: KinematicParams) -> np.ndarray:
    """
    Robot-frame twist (vx_body, vy_body, dtheta) realized by the base wheels.

    Inverse of G · S_L.
    """
    require_finite('wheel command', command.wheels)
    return np.linalg.solve(gear_matrix(params) @ wheel_matrix(params), command.wheels)


def global_velocity(theta: float, command: WheelCommand, params: KinematicParams) -> GlobalVelocity:
    """Global-frame base velocity realized by a wheel command at heading theta."""
    twist = body_twist(command, params)
    world = rotation_matrix(theta).T @ twist
    return GlobalVelocity(float(world[0]), float(world[1]), float(world[2]))


def joint_rate(command: WheelCommand, dtheta: float, params: KinematicParams) -> float:
    """Relative camera rate dgamma encoded by the joint entry of a command."""
    if command.joint is None:
        return 0.0
    return command.joint / params.joint_gear_ratio - dtheta


def accumulate_wheel_rotation(command: WheelCommand, dt: float, accumulated: float) -> float:
    """
    Add the base wheels' absolute rotation over dt to an accumulator.

    The camera joint is not part of the base energy proxy.
    """
    dt = require_positive_dt(dt)
    return accumulated + float(np.sum(np.abs(command.wheels))) * dt
