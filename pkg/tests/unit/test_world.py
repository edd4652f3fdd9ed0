"""Ground-truth stepping and the synthetic sensors."""

import math

import numpy as np
import pytest

from rotcam_slam.kinematics.omni import ExtendedVelocity, GlobalVelocity, WheelCommand, wheel_speeds
from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.utility.config import SensorConfig
from rotcam_slam.utility.exceptions import InvalidInputError
from rotcam_slam.world.sensors import (
    encoder_ticks,
    raycast_lrf,
    scan_match_odometry,
    synthesize_inertial_and_encoder,
    wheel_odometry,
)
from rotcam_slam.world.simulator import TrueState, World, step_world

QUIET = SensorConfig(sigma_gyro=0.0, a_t=0.0, b_t=0.0, a_r=0.0, b_r=0.0, sigma_wheel=0.0)


class TestWorld:
    def test_zero_command_keeps_state(self, box_env, params):
        world = World(box_env, params)
        state = step_world(world, WheelCommand(np.zeros(3)), 0.1)
        assert (state.pose.x, state.pose.y, state.pose.theta) == pytest.approx((2.0, 2.0, 0.0))
        assert state.time == pytest.approx(0.1)
        assert world.wheel_rotation == 0.0

    def test_forward_step(self, box_env, params):
        world = World(box_env, params)
        state = step_world(world, wheel_speeds(0.0, GlobalVelocity(0.5, 0.0, 0.0), params), 0.1)
        assert state.pose.x == pytest.approx(2.05, abs=1e-12)
        assert state.pose.y == pytest.approx(2.0, abs=1e-12)
        assert world.path_length == pytest.approx(0.05)
        assert state.twist.vx == pytest.approx(0.5)

    def test_extended_velocity_turns_camera(self, box_env, params):
        world = World(box_env, params)
        for _ in range(10):
            state = step_world(world, ExtendedVelocity(0.0, 0.0, 0.0, 1.0), 0.1)
        assert state.gamma == pytest.approx(1.0, abs=1e-9)
        assert state.pose.theta == pytest.approx(0.0, abs=1e-12)
        assert state.psi == pytest.approx(1.0, abs=1e-9)
        assert world.camera_rotation == pytest.approx(1.0, abs=1e-9)
        assert world.wheel_rotation == 0.0

    def test_counter_rotation_keeps_camera_heading(self, box_env, params):
        world = World(box_env, params)
        for _ in range(10):
            state = step_world(world, ExtendedVelocity(0.0, 0.0, 0.5, -0.5), 0.1)
        assert state.pose.theta == pytest.approx(0.5, abs=1e-9)
        assert state.psi == pytest.approx(0.0, abs=1e-9)

    def test_contact_halts_translation(self, box_env, params):
        world = World(box_env, params)
        command = wheel_speeds(0.0, GlobalVelocity(1.0, 0.0, 0.0), params)
        for _ in range(30):
            state = step_world(world, command, 0.1)
        assert world.in_contact
        assert world.contacts > 0
        assert 3.53 <= state.pose.x <= 3.551
        assert not box_env.collides(state.pose.x, state.pose.y, world.robot_radius)
        assert state.twist.vx == 0.0
        # wheels keep turning against the wall
        assert world.wheel_rotation == pytest.approx(30 * 0.1 * np.abs(command.wheels).sum())

    def test_contact_clears(self, box_env, params):
        world = World(box_env, params)
        forward = wheel_speeds(0.0, GlobalVelocity(1.0, 0.0, 0.0), params)
        for _ in range(30):
            step_world(world, forward, 0.1)
        step_world(world, wheel_speeds(0.0, GlobalVelocity(-0.5, 0.0, 0.0), params), 0.1)
        assert not world.in_contact

    def test_over_limit_command(self, box_env, params):
        world = World(box_env, params)
        with pytest.raises(InvalidInputError):
            step_world(world, WheelCommand(np.array([50.0, 0.0, 0.0])), 0.1)

    def test_non_finite_command(self, box_env, params):
        world = World(box_env, params)
        with pytest.raises(InvalidInputError):
            step_world(world, WheelCommand(np.array([math.nan, 0.0, 0.0])), 0.1)

    @pytest.mark.parametrize('dt', [0.0, -0.1])
    def test_bad_dt(self, box_env, params, dt):
        with pytest.raises(InvalidInputError):
            step_world(World(box_env, params), WheelCommand(np.zeros(3)), dt)

    def test_initial_gamma(self, box_env, params):
        world = World(box_env, params, gamma=0.4)
        assert world.state.gamma == pytest.approx(0.4)
        assert world.state.psi == pytest.approx(0.4)


class TestInertial:
    def test_noise_free_rates(self):
        state = TrueState(Pose2D(), 0.01, GlobalVelocity(0.0, 0.0, 0.3), 0.2, time=1.0)
        reading = synthesize_inertial_and_encoder(state, QUIET, np.random.default_rng(0))
        assert reading.base_gyro == pytest.approx(0.3)
        assert reading.cam_gyro == pytest.approx(0.5)
        assert reading.encoder_ticks == 1
        assert reading.time == 1.0

    def test_consumes_two_draws(self):
        rng = np.random.default_rng(7)
        synthesize_inertial_and_encoder(TrueState(), SensorConfig(), rng)
        reference = np.random.default_rng(7)
        reference.normal(size=2)
        assert rng.normal() == reference.normal()

    def test_gyro_noise_level(self):
        rng = np.random.default_rng(3)
        cfg = SensorConfig(sigma_gyro=0.05)
        samples = [synthesize_inertial_and_encoder(TrueState(), cfg, rng).base_gyro for _ in range(4000)]
        assert np.std(samples) == pytest.approx(0.05, rel=0.1)

    def test_encoder_ticks(self):
        tick = math.radians(0.5)
        assert encoder_ticks(0.0, tick) == 0
        assert encoder_ticks(-3.2 * tick, tick) == -3


class TestScanMatch:
    def test_noise_free_is_relative_pose(self):
        prev = Pose2D(1.0, 1.0, math.pi / 2)
        curr = Pose2D(1.0, 1.5, math.pi / 2)
        delta = scan_match_odometry(prev, curr, QUIET, np.random.default_rng(0))
        assert (delta.delta.x, delta.delta.y, delta.delta.theta) == pytest.approx((0.5, 0.0, 0.0), abs=1e-12)
        assert np.array_equal(delta.cov, np.zeros((3, 3)))

    def test_covariance_grows_with_motion(self):
        cfg = SensorConfig()
        delta = scan_match_odometry(Pose2D(), Pose2D(0.5, 0.0, 0.1), cfg, np.random.default_rng(0))
        sigma_xy = 0.02 * 0.5 + 0.001
        sigma_th = 0.02 * 0.1 + 0.0005
        assert np.diag(delta.cov) == pytest.approx([sigma_xy ** 2, sigma_xy ** 2, sigma_th ** 2])

    def test_sampling_matches_reported_covariance(self):
        rng = np.random.default_rng(11)
        cfg = SensorConfig()
        xs = [scan_match_odometry(Pose2D(), Pose2D(), cfg, rng).delta.x for _ in range(4000)]
        assert np.std(xs) == pytest.approx(cfg.b_t, rel=0.1)


class TestWheelOdometry:
    def test_noise_free_twist(self, params):
        command = wheel_speeds(0.0, GlobalVelocity(0.2, -0.1, 0.3), params)
        odo = wheel_odometry(command, params, QUIET, np.random.default_rng(0), time=2.0)
        assert odo.twist == pytest.approx([0.2, -0.1, 0.3], abs=1e-12)
        assert odo.time == 2.0

    def test_covariance(self, params):
        odo = wheel_odometry(WheelCommand(np.zeros(3)), params, SensorConfig(sigma_wheel=0.1),
                             np.random.default_rng(0))
        assert np.diag(odo.cov) == pytest.approx([0.01, 0.01, 0.01])


class TestLrf:
    def test_sweep_in_room(self, box_env):
        ranges = raycast_lrf(box_env, Pose2D(2.0, 2.0, 0.0))
        assert ranges.shape == (360,)
        assert ranges[0] == pytest.approx(1.75, abs=1e-9)
        assert ranges[90] == pytest.approx(1.75, abs=1e-9)
        assert ranges[45] == pytest.approx(1.75 * math.sqrt(2), abs=0.08)

    def test_rays_follow_heading(self, box_env):
        turned = raycast_lrf(box_env, Pose2D(1.0, 2.0, math.pi))
        assert turned[0] == pytest.approx(0.75, abs=1e-9)

    def test_clamped_to_max_range(self, box_env):
        ranges = raycast_lrf(box_env, Pose2D(2.0, 2.0, 0.0), max_range=1.0)
        assert ranges.max() <= 1.0
