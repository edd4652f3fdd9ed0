"""Wheel-speed maps, forward kinematics and pose integration."""

import math

import numpy as np
import pytest

from rotcam_slam.kinematics.omni import (
    ExtendedVelocity,
    GlobalVelocity,
    KinematicParams,
    WheelCommand,
    accumulate_wheel_rotation,
    body_twist,
    extended_map,
    extended_wheel_speeds,
    global_velocity,
    joint_rate,
    wheel_speeds,
)
from rotcam_slam.kinematics.pose import Pose2D, integrate_pose
from rotcam_slam.utility.exceptions import InvalidInputError, InvalidParameterError
from rotcam_slam.utility.pure import wrap_angle


def oracle_wheels(theta, v, D=0.135, r=0.04, alpha=(0.0, 2 * math.pi / 3, 4 * math.pi / 3)):
    """Row-by-row evaluation of G * S_L * T_R * v."""
    c, s = math.cos(theta), math.sin(theta)
    bx = c * v[0] + s * v[1]
    by = -s * v[0] + c * v[1]
    return np.array([(-math.sin(a) * bx + math.cos(a) * by + D * v[2]) / r for a in alpha])


class TestWheelSpeeds:
    def test_zero_velocity(self, params):
        assert np.array_equal(wheel_speeds(1.3, GlobalVelocity(), params).wheels, np.zeros(3))

    def test_pure_rotation_equal_wheels(self, params):
        omega = wheel_speeds(0.7, GlobalVelocity(0.0, 0.0, 1.0), params).wheels
        assert omega == pytest.approx([3.375, 3.375, 3.375], abs=1e-12)

    def test_forward_at_zero_heading(self, params):
        omega = wheel_speeds(0.0, GlobalVelocity(1.0, 0.0, 0.0), params).wheels
        assert omega == pytest.approx([0.0, -21.6506, 21.6506], abs=1e-4)

    def test_matches_oracle_on_random_inputs(self, params, rng):
        for _ in range(1000):
            theta = rng.uniform(-math.pi, math.pi)
            v = rng.uniform(-2.0, 2.0, size=3)
            got = wheel_speeds(theta, GlobalVelocity(*v), params).wheels
            assert np.max(np.abs(got - oracle_wheels(theta, v))) <= 1e-9

    def test_translation_sums_to_zero(self, params, rng):
        for _ in range(100):
            v = GlobalVelocity(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0)
            assert abs(wheel_speeds(rng.uniform(-3, 3), v, params).wheels.sum()) <= 1e-12

    def test_non_finite_rejected(self, params):
        with pytest.raises(InvalidInputError):
            wheel_speeds(0.0, GlobalVelocity(math.nan, 0.0, 0.0), params)
        with pytest.raises(InvalidInputError):
            wheel_speeds(math.inf, GlobalVelocity(), params)


class TestExtendedWheelSpeeds:
    def test_zero(self, params):
        cmd = extended_wheel_speeds(0.4, ExtendedVelocity(), params)
        assert np.array_equal(cmd.wheels, np.zeros(3))
        assert cmd.joint == 0.0

    def test_counter_rotation_keeps_joint_still(self, params):
        cmd = extended_wheel_speeds(0.0, ExtendedVelocity(0.0, 0.0, 1.0, -1.0), params)
        assert cmd.wheels == pytest.approx([3.375] * 3, abs=1e-12)
        assert cmd.joint == 0.0

    def test_forward_with_camera_rate(self, params):
        cmd = extended_wheel_speeds(0.0, ExtendedVelocity(1.0, 0.0, 0.0, 0.5), params)
        assert cmd.wheels == pytest.approx([0.0, -21.6506, 21.6506], abs=1e-4)
        assert cmd.joint == pytest.approx(0.5)

    def test_base_rows_bit_identical(self, params, rng):
        for _ in range(200):
            theta = rng.uniform(-math.pi, math.pi)
            vx, vy, dth = rng.uniform(-1, 1, size=3)
            ext = extended_wheel_speeds(theta, ExtendedVelocity(vx, vy, dth, 0.0), params)
            base = wheel_speeds(theta, GlobalVelocity(vx, vy, dth), params)
            assert np.array_equal(ext.wheels, base.wheels)

    def test_matches_full_extended_matrix(self, params, rng):
        for _ in range(200):
            theta = rng.uniform(-math.pi, math.pi)
            v = rng.uniform(-1, 1, size=4)
            cmd = extended_wheel_speeds(theta, ExtendedVelocity.from_array(v), params)
            full = extended_map(theta, params) @ v
            assert np.max(np.abs(np.append(cmd.wheels, cmd.joint) - full)) <= 1e-9

    def test_gear_ratio_scales_joint(self):
        p = KinematicParams(joint_gear_ratio=3.0)
        cmd = extended_wheel_speeds(0.0, ExtendedVelocity(0.0, 0.0, 0.2, 0.3), p)
        assert cmd.joint == pytest.approx(1.5)


class TestForwardKinematics:
    def test_global_velocity_inverts_wheel_speeds(self, params, rng):
        for _ in range(200):
            theta = rng.uniform(-math.pi, math.pi)
            v = rng.uniform(-1, 1, size=3)
            back = global_velocity(theta, wheel_speeds(theta, GlobalVelocity(*v), params), params)
            assert np.max(np.abs(back.as_array() - v)) <= 1e-9

    def test_body_twist_of_forward_command(self, params):
        cmd = wheel_speeds(0.0, GlobalVelocity(1.0, 0.0, 0.0), params)
        assert body_twist(cmd, params) == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)

    def test_joint_rate_recovers_dgamma(self, params):
        cmd = extended_wheel_speeds(0.0, ExtendedVelocity(0.0, 0.0, 0.2, 0.3), params)
        assert joint_rate(cmd, 0.2, params) == pytest.approx(0.3)
        assert joint_rate(WheelCommand(np.zeros(3)), 0.2, params) == 0.0


class TestParams:
    def test_from_dict_uses_config_keys(self):
        p = KinematicParams.from_dict({'D': 0.2, 'r': 0.05, 'joint_gear': 2.0})
        assert (p.D, p.r, p.joint_gear_ratio) == (0.2, 0.05, 2.0)

    @pytest.mark.parametrize('kwargs', [
        {'wheel_center_distance': 0.0},
        {'wheel_radius': -0.1},
        {'joint_gear_ratio': 0.0},
        {'wheel_angles': (0.0, 0.0, 1.0)},
        {'wheel_angles': (0.0, 2 * math.pi, 1.0)},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            KinematicParams(**kwargs)


class TestIntegration:
    def test_zero_velocity_keeps_pose(self):
        pose, gamma = integrate_pose(Pose2D(1.0, 2.0, 0.3), GlobalVelocity(), 0.1, 0.0, 0.1)
        assert (pose.x, pose.y, pose.theta) == pytest.approx((1.0, 2.0, 0.3), abs=1e-15)
        assert gamma == pytest.approx(0.1)

    def test_forward_step(self):
        pose, _ = integrate_pose(Pose2D(), GlobalVelocity(1.0, 0.0, 0.0), 0.0, 0.0, 0.1)
        assert (pose.x, pose.y, pose.theta) == pytest.approx((0.1, 0.0, 0.0))

    def test_heading_wraps(self):
        pose, _ = integrate_pose(Pose2D(0.0, 0.0, 3.0), GlobalVelocity(0.0, 0.0, 10.0), 0.0, 0.0, 0.1)
        assert pose.theta == pytest.approx(-2.28319, abs=1e-5)

    def test_camera_heading_is_additive(self, rng):
        pose, gamma, psi = Pose2D(), 0.0, 0.0
        for _ in range(500):
            dth, dg = rng.uniform(-2, 2, size=2)
            pose, gamma = integrate_pose(pose, GlobalVelocity(0.0, 0.0, dth), gamma, dg, 0.01)
            psi = wrap_angle(psi + (dth + dg) * 0.01)
            assert abs(wrap_angle(pose.theta + gamma - psi)) <= 1e-9

    @pytest.mark.parametrize('dt', [0.0, -0.1, math.nan])
    def test_bad_dt(self, dt):
        with pytest.raises(InvalidInputError):
            integrate_pose(Pose2D(), GlobalVelocity(), 0.0, 0.0, dt)


class TestWheelRotation:
    def test_zero_command(self):
        assert accumulate_wheel_rotation(WheelCommand(np.zeros(3)), 0.1, 2.5) == 2.5

    def test_unit_wheels(self):
        assert accumulate_wheel_rotation(WheelCommand(np.ones(3)), 1.0, 0.0) == 3.0

    def test_forward_command(self):
        cmd = WheelCommand(np.array([0.0, -21.6506, 21.6506]))
        assert accumulate_wheel_rotation(cmd, 0.1, 0.0) == pytest.approx(4.33012)

    def test_joint_excluded(self):
        assert accumulate_wheel_rotation(WheelCommand(np.zeros(3), 5.0), 1.0, 0.0) == 0.0


def test_pose_compose_and_relative_are_inverse():
    a = Pose2D(1.0, -2.0, 0.7)
    b = Pose2D(0.3, 0.5, -2.9)
    back = a.compose(b.relative_to(a))
    assert (back.x, back.y) == pytest.approx((b.x, b.y))
    assert abs(wrap_angle(back.theta - b.theta)) < 1e-12
