#!/usr/bin/env python3

"""
Monte-Carlo NEES of the robot filter over the trial pipeline.

Every run builds a :class:`~rotcam_slam.trial.Trial`, holds one wheel
command for the whole run and calls the trial's own sensing and estimation
steps, so the World, the sensor synthesis and the filter configuration are
the ones trials use. NEES is taken against the World's true pose.

    value = monte_carlo_nees(runs=100, seed=0)
    low, high = chi2_band(3, 100)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rotcam_slam.estimation.consistency import nees
from rotcam_slam.estimation.gaussian import GaussianEstimate
from rotcam_slam.kinematics.omni import ExtendedVelocity, extended_wheel_speeds
from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.trial import Trial, environment_for
from rotcam_slam.utility.config import ExperimentConfig
from rotcam_slam.utility.logging_config import release_trial_loggers
from rotcam_slam.utility.pure import wrap_angle
from rotcam_slam.world.environment import Environment

# spawn key of the prior draw, after the trial's own noise streams
PRIOR_STREAM = 4

DEFAULT_SETUP = {
    'mode': 'A',
    'env': {'path': 'room', 'start': [1.0, 1.0, 0.0]},
}


@dataclass(frozen=True)
class FixedTwist:
    """Body twist commanded for ``steps`` control steps; an arc of about 2 m by default."""
    vx: float = 0.2
    vy: float = 0.05
    dtheta: float = 0.1
    steps: int = 100


def pose_error(estimate: np.ndarray, truth: Pose2D) -> np.ndarray:
    return np.array([estimate[0] - truth.x, estimate[1] - truth.y, wrap_angle(estimate[2] - truth.theta)])


def _draw_prior(trial: Trial, twist: np.ndarray, rng: np.random.Generator) -> None:
    """Centre the filter prior on a draw around the truth with the prior's own spread."""
    est = trial.robot_filter.estimate
    truth = np.concatenate([trial.world.state.pose.as_array(), twist])
    mean = truth + rng.normal(0.0, 1.0, size=6) * np.sqrt(np.diag(est.cov))
    mean[2] = wrap_angle(mean[2])
    trial.robot_filter.estimate = GaussianEstimate(mean, est.cov, est.time)


def run_nees_trial(cfg: ExperimentConfig, seed: int, motion: FixedTwist | None = None,
                   env: Environment | None = None) -> np.ndarray:
    """
    One seeded run along the fixed twist.

    :return: NEES of the 3-DOF robot pose after every driven step
    """
    motion = motion or FixedTwist()
    trial = Trial(cfg, seed, env)
    dt = cfg.ctrl.step_dt
    # wheel speeds of a body twist do not depend on the heading
    command = extended_wheel_speeds(0.0, ExtendedVelocity(motion.vx, motion.vy, motion.dtheta), cfg.kin)
    prior_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(PRIOR_STREAM,)))
    _draw_prior(trial, np.array([motion.vx, motion.vy, motion.dtheta]), prior_rng)

    trial.estimate(0, trial.sense(0, 0.0))
    out = np.empty(motion.steps)
    try:
        for k in range(1, motion.steps + 1):
            trial.command = command
            trial.world.step(command, dt)
            trial.estimate(k, trial.sense(k, round(k * dt, 9)))
            est = trial.robot_filter.estimate
            out[k - 1] = nees(pose_error(est.mean, trial.world.state.pose), est.cov[:3, :3])
    finally:
        release_trial_loggers(trial.label)
    return out


def monte_carlo_nees(runs: int = 100, seed: int = 0, cfg: ExperimentConfig | None = None,
                     motion: FixedTwist | None = None) -> float:
    """
    Time-averaged NEES over ``runs`` runs with seeds ``seed .. seed + runs - 1``.

    :return: Mean over runs and steps, comparable to ``chi2_band(3, runs)``
    """
    cfg = cfg or ExperimentConfig.from_dict(DEFAULT_SETUP)
    env = environment_for(cfg)
    traces = np.array([run_nees_trial(cfg, seed + i, motion, env) for i in range(runs)])
    return float(traces.mean())
