"""EKF primitives, the two filters, state merging and consistency tooling."""

import math

import numpy as np
import pytest

from conftest import angle_close
from rotcam_slam.estimation.consistency import chi2_band, nees
from rotcam_slam.estimation.filters import CameraFilter, RobotFilter, differential_imu, scan_match_twist
from rotcam_slam.estimation.gaussian import ConstantModel, GaussianEstimate, check_psd, ekf_predict, ekf_update
from rotcam_slam.estimation.merge import (
    camera_as_ground_truth,
    fuse_loop_closure_xy,
    interpolate_estimate,
    merge_states,
)
from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.utility.config import EstimationConfig, SensorConfig
from rotcam_slam.utility.exceptions import EstimationError, InvalidInputError, TimestampMismatchError
from rotcam_slam.world.sensors import InertialReading, OdometryDelta, WheelOdometry


class TestGaussian:
    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            GaussianEstimate(np.zeros(3), np.eye(2))

    def test_predict_adds_process_noise(self):
        est = GaussianEstimate(np.array([1.0, 2.0]), np.eye(2), 0.5)
        out = ekf_predict(est, ConstantModel(2, q=0.2), 0.5)
        assert out.mean.tolist() == [1.0, 2.0]
        assert np.diag(out.cov) == pytest.approx([1.1, 1.1])
        assert out.time == pytest.approx(1.0)

    def test_predict_rejects_bad_dt(self):
        with pytest.raises(InvalidInputError):
            ekf_predict(GaussianEstimate(np.zeros(1), np.eye(1)), ConstantModel(1), 0.0)

    def test_scalar_update(self):
        est = GaussianEstimate(np.array([0.0]), np.array([[1.0]]))
        out = ekf_update(est, [2.0], [[1.0]], [[1.0]])
        assert out.mean[0] == pytest.approx(1.0)
        assert out.cov[0, 0] == pytest.approx(0.5)

    def test_angular_residual_takes_short_arc(self):
        est = GaussianEstimate(np.array([3.1]), np.array([[1.0]]))
        out = ekf_update(est, [-3.1], [[1.0]], [[1.0]], angular=(0,), wrap_state=(0,))
        assert angle_close(out.mean[0], math.pi, 1e-9)

    def test_singular_innovation(self):
        est = GaussianEstimate(np.zeros(2), np.zeros((2, 2)))
        with pytest.raises(EstimationError):
            ekf_update(est, [1.0], [[1.0, 0.0]], [[0.0]])

    def test_non_finite_measurement(self):
        est = GaussianEstimate(np.zeros(1), np.eye(1))
        with pytest.raises(InvalidInputError):
            ekf_update(est, [math.nan], [[1.0]], [[1.0]])

    def test_check_psd(self):
        assert check_psd(np.array([[1.0, 0.2], [0.0, 1.0]]))[0, 1] == pytest.approx(0.1)
        with pytest.raises(EstimationError):
            check_psd(np.array([[1.0, 0.0], [0.0, -0.5]]))
        with pytest.raises(EstimationError):
            check_psd(np.array([[math.inf]]))


class TestRobotFilter:
    def test_initial_state(self):
        filt = RobotFilter(Pose2D(1.0, 2.0, 0.5), EstimationConfig())
        assert filt.pose == Pose2D(1.0, 2.0, 0.5)
        assert filt.estimate.cov[0, 0] == pytest.approx(1e-4)

    def test_predict_at_rest(self):
        filt = RobotFilter(Pose2D(1.0, 2.0, 0.5), EstimationConfig())
        before = filt.estimate.cov.copy()
        est = filt.predict(0.1)
        assert est.mean[:3] == pytest.approx([1.0, 2.0, 0.5])
        assert np.all(np.diag(est.cov) >= np.diag(before))
        assert est.time == pytest.approx(0.1)

    def test_wheels_then_predict_moves_along_heading(self):
        filt = RobotFilter(Pose2D(0.0, 0.0, 0.5), EstimationConfig())
        filt.predict(0.1)
        filt.update_wheels(WheelOdometry(np.array([0.3, 0.0, 0.0]), np.eye(3) * 1e-4, 0.1))
        assert filt.estimate.mean[3] == pytest.approx(0.3, abs=0.005)
        est = filt.predict(0.1)
        assert est.mean[0] == pytest.approx(0.3 * math.cos(0.5) * 0.1, abs=1e-3)
        assert est.mean[1] == pytest.approx(0.3 * math.sin(0.5) * 0.1, abs=1e-3)

    def test_gyro_update(self):
        filt = RobotFilter(Pose2D(), EstimationConfig())
        filt.predict(0.1)
        est = filt.update_gyro(0.4, 1e-6)
        assert est.mean[5] == pytest.approx(0.4, abs=1e-3)

    def test_scan_match_is_mean_twist(self):
        filt = RobotFilter(Pose2D(), EstimationConfig())
        filt.predict(0.1)
        delta = OdometryDelta(Pose2D(0.2, 0.0, 0.0), np.eye(3) * 1e-8, 1.0)
        est = filt.update_scan_match(delta)
        assert est.mean[3] == pytest.approx(0.2, abs=1e-3)

    def test_scan_match_twist_follows_the_arc(self):
        # displacement after 1 s of the body twist (0.3, 0, 0.5)
        delta = Pose2D(0.28765548, 0.07345044, 0.5)
        twist, jac = scan_match_twist(delta, 1.0)
        assert twist == pytest.approx([0.3, 0.0, 0.5], abs=1e-4)
        assert jac[2, 2] == 1.0
        filt = RobotFilter(Pose2D(), EstimationConfig())
        filt.predict(0.1)
        est = filt.update_scan_match(OdometryDelta(delta, np.eye(3) * 1e-10, 1.0))
        assert est.mean[3:6] == pytest.approx([0.3, 0.0, 0.5], abs=1e-3)

    def test_fuse_xy_keeps_heading(self):
        filt = RobotFilter(Pose2D(1.0, 1.0, 0.7), EstimationConfig())
        est = filt.fuse_xy([1.1, 0.9], np.eye(2) * 1e-4)
        assert est.mean[2] == 0.7
        assert est.mean[0] == pytest.approx(1.05, abs=1e-6)
        assert est.cov[0, 0] < 1e-4


class TestCameraFilter:
    def test_encoder_pulls_angle(self):
        sensors = SensorConfig()
        filt = CameraFilter(0.0, EstimationConfig(), sensors)
        est = filt.update_encoder(10)
        assert 0.0 < est.mean[0] < 10 * sensors.tick_size
        assert est.mean[0] == pytest.approx(5 * sensors.tick_size)

    def test_inertial_uses_gyro_difference(self):
        filt = CameraFilter(0.0, EstimationConfig(), SensorConfig())
        filt.predict(0.1)
        est = filt.update_inertial(InertialReading(0.1, 0.4, 0, 0.1))
        assert 0.0 < est.mean[1] < 0.3

    def test_encoder_wraps(self):
        sensors = SensorConfig()
        filt = CameraFilter(math.pi - 0.01, EstimationConfig(), sensors)
        ticks = round((-math.pi + 0.01) / sensors.tick_size)
        est = filt.update_encoder(ticks)
        assert abs(est.mean[0]) > 3.0

    def test_differential_imu(self):
        m = differential_imu(0.1, 0.4, 1.0, 1.002)
        assert m.rel_rate == pytest.approx(0.3)
        assert m.variance == 0.01
        with pytest.raises(TimestampMismatchError):
            differential_imu(0.1, 0.4, 1.0, 1.01)


class TestMerge:
    def test_composition(self):
        robot = GaussianEstimate(np.array([1.0, 2.0, 3.0, 0.1, 0.2, 0.3]),
                                 np.diag([0.1, 0.2, 0.01, 0.3, 0.4, 0.04]), 2.0)
        camera = GaussianEstimate(np.array([0.5, -0.1]), np.diag([0.02, 0.03]), 2.0)
        merged = merge_states(robot, camera)
        assert merged.psi == pytest.approx(-2.78319, abs=1e-5)
        assert merged.dpsi == pytest.approx(0.2)
        assert merged.cov[2, 2] == pytest.approx(0.03)
        assert merged.cov[5, 5] == pytest.approx(0.07)
        assert merged.cov[0, 0] == 0.1
        assert (merged.theta, merged.gamma, merged.time) == (3.0, 0.5, 2.0)
        assert merged.pose == Pose2D(1.0, 2.0, merged.psi)

    def test_ground_truth_camera_keeps_robot_covariance(self):
        robot = GaussianEstimate(np.array([0.0, 0.0, 0.3, 0.0, 0.0, 0.1]), np.eye(6) * 0.01, 0.0)
        merged = merge_states(robot, camera_as_ground_truth(0.2, 0.5))
        assert np.array_equal(merged.cov, robot.cov)
        assert merged.psi == pytest.approx(0.5)
        assert merged.dpsi == pytest.approx(0.6)

    def test_unsynchronized(self):
        robot = GaussianEstimate(np.zeros(6), np.eye(6), 1.0)
        with pytest.raises(TimestampMismatchError):
            merge_states(robot, camera_as_ground_truth(0.0, time=1.1))

    def test_camera_interpolated_between_samples(self):
        robot = GaussianEstimate(np.zeros(6), np.eye(6), 1.02)
        previous = GaussianEstimate(np.array([0.2, 0.0]), np.eye(2) * 0.01, 1.0)
        camera = GaussianEstimate(np.array([0.4, 0.0]), np.eye(2) * 0.02, 1.1)
        merged = merge_states(robot, camera, previous=previous)
        assert merged.gamma == pytest.approx(0.24)
        assert merged.cov[2, 2] == pytest.approx(1.01)
        assert merged.time == 1.02

    def test_interpolate_short_arc(self):
        before = GaussianEstimate(np.array([3.0, 0.0]), np.eye(2), 0.0)
        after = GaussianEstimate(np.array([-3.0, 1.0]), np.eye(2) * 2, 1.0)
        mid = interpolate_estimate(before, after, 0.5)
        assert angle_close(mid.mean[0], math.pi, 1e-9)
        assert mid.mean[1] == pytest.approx(0.5)
        assert mid.cov[0, 0] == 2.0
        assert interpolate_estimate(before, after, 0.2).cov[0, 0] == 1.0

    def test_interpolate_degenerate_span(self):
        est = GaussianEstimate(np.array([1.0, 0.0]), np.eye(2), 1.0)
        assert interpolate_estimate(est, est, 1.0).mean.tolist() == [1.0, 0.0]

    def test_loop_closure_fusion_restores_theta(self):
        est = GaussianEstimate(np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]), np.eye(6) * 0.01, 0.0)
        out = fuse_loop_closure_xy(est, [0.2, 0.0], np.eye(2) * 0.01)
        assert out.mean[0] == pytest.approx(0.1)
        assert out.mean[2] == 1.0

    def test_loop_closure_fusion_keeps_correlated_theta_variance(self):
        cov = np.eye(6) * 0.01
        cov[0, 2] = cov[2, 0] = 0.008
        est = GaussianEstimate(np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]), cov, 0.0)
        out = fuse_loop_closure_xy(est, [0.2, 0.0], np.eye(2) * 0.01)
        assert out.mean[2] == 1.0
        assert out.cov[2, 2] == est.cov[2, 2]
        assert out.cov[0, 0] == pytest.approx(0.005)
        assert out.cov[1, 1] == pytest.approx(0.005)
        assert out.cov[0, 2] == pytest.approx(0.004)
        assert np.allclose(out.cov, out.cov.T)


class TestConsistency:
    def test_nees(self):
        assert nees([1.0, 0.0, 0.0], np.eye(3)) == pytest.approx(1.0)
        assert nees([1.0, 1.0], np.diag([2.0, 0.5])) == pytest.approx(2.5)

    def test_chi2_band(self):
        low, high = chi2_band(3, 1)
        assert low == pytest.approx(0.2158, abs=1e-3)
        assert high == pytest.approx(9.348, abs=1e-3)
        low, high = chi2_band(3, 100)
        assert low < 3.0 < high

