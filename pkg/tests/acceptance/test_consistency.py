"""Consistency of the robot filter along a rotating drive, and the pose composition law over full trials."""

import numpy as np
import pytest

from rotcam_slam import trial as trial_module
from rotcam_slam.estimation.consistency import chi2_band
from rotcam_slam.monte_carlo import monte_carlo_nees
from rotcam_slam.trial import run_trial
from rotcam_slam.utility.config import ExperimentConfig

pytestmark = pytest.mark.acceptance

# 95% band of the time-averaged 3-DOF NEES over 100 runs
NEES_BAND = (2.36, 3.72)


def test_time_averaged_nees_within_band():
    value = monte_carlo_nees(runs=100, seed=0)
    assert NEES_BAND[0] <= value <= NEES_BAND[1]


def test_chi_square_band_is_inside_the_accepted_one():
    low, high = chi2_band(3, 100)
    assert NEES_BAND[0] <= low < 3.0 < high <= NEES_BAND[1]


@pytest.fixture
def compositions(monkeypatch):
    seen = []
    original = trial_module.merge_states

    def recording(robot, camera, *args):
        merged = original(robot, camera, *args)
        seen.append((robot, camera, merged))
        return merged

    monkeypatch.setattr(trial_module, 'merge_states', recording)
    return seen


@pytest.mark.parametrize('mode', ['HH', 'OC'])
def test_heading_variance_is_the_sum(compositions, mode):
    cfg = ExperimentConfig.from_dict({'mode': mode, 'duration': 60.0, 'env': {'path': 'office'}})
    run_trial(cfg, 1)
    assert compositions
    for robot, camera, merged in compositions:
        assert merged.cov[2, 2] == robot.cov[2, 2] + camera.cov[0, 0]
        assert merged.cov[5, 5] == robot.cov[5, 5] + camera.cov[1, 1]


def test_locked_camera_leaves_the_robot_estimate_untouched(compositions):
    cfg = ExperimentConfig.from_dict({'mode': 'A', 'duration': 60.0, 'env': {'path': 'office'}})
    run_trial(cfg, 1)
    assert compositions
    for robot, _, merged in compositions:
        assert np.array_equal(merged.mean, robot.mean)
        assert np.array_equal(merged.cov, robot.cov)
