#!/usr/bin/env python3

"""
One seeded closed-loop exploration trial.

Every control step runs sense -> estimate -> merge -> map/graph -> plan ->
control -> world step. The trial ends at ``duration``, when no reachable
frontier is left (exploration complete), or when a controller fault or a
contact outlasts ``trial.fault_timeout`` (failed).
"""

from __future__ import annotations

import math
from collections.abc import Callable
from pathlib import Path

import numpy as np

from rotcam_slam.estimation.filters import CameraFilter, RobotFilter
from rotcam_slam.estimation.gaussian import GaussianEstimate
from rotcam_slam.estimation.merge import MergedState, camera_as_ground_truth, merge_states
from rotcam_slam.kinematics.omni import ExtendedVelocity, KinematicParams, WheelCommand, body_twist, \
    extended_wheel_speeds
from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.metrics.accuracy import balanced_accuracy, ground_truth_labels
from rotcam_slam.metrics.record import TrialRecord
from rotcam_slam.metrics.report import write_estimates_csv, write_trial_csv
from rotcam_slam.planning.controller import ControlResult, rh_solve, trajectory_blocked
from rotcam_slam.planning.frontier import detect_frontiers
from rotcam_slam.planning.modes import PlatformMode
from rotcam_slam.planning.paths import distance_field
from rotcam_slam.planning.waypoint import Waypoint, select_waypoint
from rotcam_slam.slam.export import write_g2o, write_labels_pgm
from rotcam_slam.slam.graph import NodePolicy, PoseGraph, detect_loop_closure, maybe_add_node
from rotcam_slam.slam.occupancy import CellClass, OccupancyGrid, classify_labels, explored_area, map_entropy, \
    project_observation, update_occupancy
from rotcam_slam.slam.optimizer import optimize_graph
from rotcam_slam.utility.config import ExperimentConfig
from rotcam_slam.utility.exceptions import EstimationError, GraphOptimizationError
from rotcam_slam.utility.logging_config import Subject, get_sim_logger, release_trial_loggers, set_sim_time
from rotcam_slam.utility.pure import wrap_angle
from rotcam_slam.world.camera import CameraObservation, camera_observation
from rotcam_slam.world.environment import Environment, load_environment
from rotcam_slam.world.sensors import SensorFrame, raycast_lrf, scan_match_odometry, \
    synthesize_inertial_and_encoder, wheel_odometry
from rotcam_slam.world.simulator import World

ENVIRONMENTS_DIR = Path(__file__).parent / 'environments'
DEFAULT_ENVIRONMENT = 'office'

REASON_CONTROLLER_FAULT = 'controller_fault'
REASON_COLLISION = 'collision'
REASON_ESTIMATION = 'estimation_error'

# independent noise streams drawn from one seed
_STREAMS = ('inertial', 'wheels', 'scan', 'loops')

MapCallback = Callable[[float, OccupancyGrid], None]


def resolve_environment_path(path: str | Path | None) -> Path:
    """
    Environment file for a config value.

    An empty value selects the bundled office; a bare bundled name
    (``office``, ``cafe``, ``room``) selects that fixture.
    """
    if not path:
        return ENVIRONMENTS_DIR / f'{DEFAULT_ENVIRONMENT}.txt'
    candidate = Path(path)
    if not candidate.suffix and not candidate.exists():
        bundled = ENVIRONMENTS_DIR / f'{candidate.name}.txt'
        if bundled.exists():
            return bundled
    return candidate


def environment_for(cfg: ExperimentConfig) -> Environment:
    """Load the configured environment with its sidecar geometry."""
    start = cfg.env.start
    if start is not None and len(start) == 2:
        start = (start[0], start[1], 0.0)
    return load_environment(
        resolve_environment_path(cfg.env.path),
        cfg.env.cell_size,
        cfg.world.resolution,
        cfg.env.origin,
        start,
        cfg.world.robot_radius,
    )


def noise_streams(seed: int) -> dict[str, np.random.Generator]:
    """Named generators spawned from ``seed``; equal for every mode of a batch."""
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(_STREAMS, children)}


def saturate(command: WheelCommand, params: KinematicParams) -> WheelCommand:
    """Scale a command uniformly until every wheel and the joint are within limits."""
    scale = 1.0
    peak = float(np.max(np.abs(command.wheels)))
    if peak > params.wheel_limit:
        scale = params.wheel_limit / peak
    if command.joint is not None and abs(command.joint) > params.joint_limit:
        scale = min(scale, params.joint_limit / abs(command.joint))
    if scale >= 1.0:
        return command
    scale *= 1.0 - 1e-12
    joint = None if command.joint is None else command.joint * scale
    return WheelCommand(command.wheels * scale, joint)


def step_covariance(twist_cov: np.ndarray, gamma: float, dt: float) -> np.ndarray:
    """
    Covariance of one odometry step of the camera frame.

    :param twist_cov: Covariance of the body twist (vx, vy, dpsi) over the step
    :param gamma: Camera joint angle
    """
    c, s = math.cos(gamma), math.sin(gamma)
    to_camera = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    cov = to_camera @ twist_cov @ to_camera.T * (dt * dt)
    return 0.5 * (cov + cov.T)


def observation_signature(obs: CameraObservation, shape: tuple[int, int]) -> frozenset[int]:
    """Linear indices of every cell a frame saw."""
    cells = np.vstack([obs.free_cells, obs.occupied_cells]).astype(np.int64)
    return frozenset(int(i) for i in cells[:, 0] * shape[1] + cells[:, 1])


class Trial:
    """
    Closed-loop state of one trial.

    :param cfg: Experiment configuration (mode, merged flag, every module config)
    :param seed: Noise seed
    :param env: Preloaded environment; loaded from ``cfg.env`` otherwise
    """

    def __init__(self, cfg: ExperimentConfig, seed: int, env: Environment | None = None):
        self.cfg = cfg
        self.seed = int(seed)
        self.label = f'{cfg.label}#{self.seed}'
        self.logger = get_sim_logger(Subject.HARNESS, self.label)
        self.mode = PlatformMode.parse(cfg.mode)
        self.env = env if env is not None else environment_for(cfg)
        self.rng = noise_streams(self.seed)

        self.world = World(self.env, cfg.kin, cfg.world.sim_dt, cfg.world.robot_radius, trial=self.label)
        self.robot_filter = RobotFilter(self.env.start, cfg.estimation)
        self.camera_filter = CameraFilter(0.0, cfg.estimation, cfg.sensors)
        self.grid = OccupancyGrid.like(self.env, cfg.slam.l_max)
        self.graph = PoseGraph(self.label)
        self.policy = NodePolicy.from_config(cfg.slam)
        self.gt_labels = ground_truth_labels(self.env)
        self.record = TrialRecord(cfg.label, self.seed, cfg.mode, cfg.merged)

        self.waypoint: Waypoint | None = None
        self.warm_start: np.ndarray | None = None
        self.last_plan = -math.inf
        self.replan_requested = False
        self.command = WheelCommand(np.zeros(3), 0.0)
        self.scan_pose = self.env.start
        self.scan_time = 0.0
        self.previous_pose: Pose2D | None = None
        self.fault_since: float | None = None
        self.contact_since: float | None = None
        self.next_map_sample = 0.0
        # twist covariance of the interval the last prediction covered
        self.interval_cov = np.zeros((3, 3))

    # --- sensing and estimation ---

    def sense(self, k: int, time: float) -> SensorFrame:
        cfg = self.cfg
        state = self.world.state
        psi = state.psi
        inertial = synthesize_inertial_and_encoder(state, cfg.sensors, self.rng['inertial'])
        wheels = wheel_odometry(self.command, cfg.kin, cfg.sensors, self.rng['wheels'], time)
        camera = camera_observation(self.env, state.pose.x, state.pose.y, psi, cfg.camera, time)
        odom_delta = None
        lrf = None
        if k > 0 and k % cfg.sensors.lrf_every == 0:
            lrf = raycast_lrf(self.env, state.pose, cfg.sensors.lrf_rays, cfg.sensors.lrf_max_range)
            odom_delta = scan_match_odometry(self.scan_pose, state.pose, cfg.sensors, self.rng['scan'],
                                             time - self.scan_time, time)
            self.scan_pose, self.scan_time = state.pose, time
        return SensorFrame(time, camera, inertial, wheels, odom_delta, lrf)

    def camera_estimate(self, frame: SensorFrame) -> GaussianEstimate:
        """
        Camera joint estimate composed into the merged state.

        A locked joint (mode A) is the identity; the NC variant takes the
        encoder angle and differential rate as exact.
        """
        time = self.robot_filter.estimate.time
        if self.mode is PlatformMode.A:
            return camera_as_ground_truth(0.0, 0.0, time)
        if not self.cfg.merged:
            reading = frame.inertial
            return camera_as_ground_truth(reading.encoder_ticks * self.cfg.sensors.tick_size,
                                          reading.cam_gyro - reading.base_gyro, time)
        return self.camera_filter.estimate

    def estimate(self, k: int, frame: SensorFrame) -> MergedState:
        """
        Filter step for the frame sensed at step k.

        Wheel odometry, the base gyro and scan matches describe the interval
        just driven, so they refine the twist of the estimate at step k-1
        before it is propagated across that interval. The encoder and the
        differential IMU follow the camera prediction.
        """
        cfg = self.cfg
        robot = self.robot_filter
        if k > 0:
            robot.update_wheels(frame.wheels)
            robot.update_gyro(frame.inertial.base_gyro, cfg.sensors.sigma_gyro ** 2)
            if frame.odom_delta is not None and frame.odom_delta.dt > 0:
                robot.update_scan_match(frame.odom_delta)
            self.interval_cov = robot.estimate.cov[3:6, 3:6].copy()
            robot.predict(cfg.ctrl.step_dt)
            self.camera_filter.predict(cfg.ctrl.step_dt)
        self.camera_filter.update_inertial(frame.inertial)
        return merge_states(robot.estimate, self.camera_estimate(frame), cfg.estimation.sync_tolerance)

    # --- mapping and graph ---

    def map_and_graph(self, frame: SensorFrame, merged: MergedState) -> MergedState:
        """Integrate the frame, extend the graph and apply a loop-closure correction."""
        cfg = self.cfg
        update_occupancy(self.grid, project_observation(self.grid, frame.camera, merged.pose), cfg.slam)

        if self.previous_pose is not None:
            step = merged.pose.relative_to(self.previous_pose)
            twist_cov = self.interval_cov.copy()
            twist_cov[2, 2] += self.camera_estimate(frame).cov[1, 1]
            self.graph.accumulate_odometry(step, step_covariance(twist_cov, merged.gamma, cfg.ctrl.step_dt))
        state = self.world.state
        truth = Pose2D(state.pose.x, state.pose.y, state.psi)
        node = maybe_add_node(self.graph, merged.pose, observation_signature(frame.camera, self.grid.shape),
                              self.policy, frame.time, truth)
        if node is not None and detect_loop_closure(self.graph, node, cfg.slam, self.rng['loops']) is not None:
            source = self.graph.edges[-1].source
            self.record.add_loop_event(frame.time, source, node.id)
            try:
                result = optimize_graph(self.graph, cfg.slam.max_iterations, cfg.slam.tolerance, self.label)
            except GraphOptimizationError as e:
                self.logger.warning(f'Skipping loop-closure correction: {e}')
            else:
                self.robot_filter.fuse_xy(result.poses[-1, :2], result.last_covariance[:2, :2])
                merged = merge_states(self.robot_filter.estimate, self.camera_estimate(frame),
                                      cfg.estimation.sync_tolerance)
        self.previous_pose = merged.pose
        return merged

    def sample_map(self, time: float, force: bool = False) -> None:
        record = self.record
        if not force and time + 1e-9 < self.next_map_sample:
            return
        if record.map_samples and time <= record.map_samples[-1][0]:
            return
        slam = self.cfg.slam
        bits, norm = map_entropy(self.grid)
        area = explored_area(self.grid, slam.free_threshold, slam.occupied_threshold)
        bac = balanced_accuracy(self.grid, self.gt_labels, slam.free_threshold, slam.occupied_threshold)
        record.add_map_sample(time, bits, norm, area, bac)
        self.next_map_sample = time + self.cfg.record.map_sample_period

    # --- planning and control ---

    def _reached(self, merged: MergedState) -> bool:
        wp = self.waypoint
        if wp is None:
            return False
        return (math.hypot(merged.x - wp.x, merged.y - wp.y) <= self.cfg.planner.goal_tolerance
                and abs(wrap_angle(merged.psi - wp.psi)) <= self.cfg.planner.heading_tolerance)

    def plan(self, time: float, merged: MergedState, labels: np.ndarray, force: bool = False) -> bool:
        """
        Select a new waypoint when due.

        :return: False when exploration is complete
        """
        cfg = self.cfg
        due = (force or self.waypoint is None or self.replan_requested or self._reached(merged)
               or time - self.last_plan >= cfg.planner.replan_period - 1e-9)
        if not due:
            return True
        self.replan_requested = False
        self.last_plan = time
        self.warm_start = None
        frontiers = detect_frontiers(labels, cfg.planner.min_frontier_size)
        if not frontiers:
            self.waypoint = None
            # free space needs two observations; the first frame alone leaves no frontier
            return not (labels == CellClass.FREE).any()
        start = self.grid.world_to_cell(merged.x, merged.y)
        reach = distance_field(labels, start, self.grid.resolution, cfg.world.robot_radius,
                               cfg.planner.inflation_extra_cells)
        self.waypoint = select_waypoint(frontiers, merged, self.grid, cfg.camera, cfg.planner,
                                        cfg.world.robot_radius, labels, reach, self.label)
        if self.waypoint is None:
            return False
        self.logger.debug(f'Waypoint ({self.waypoint.x:.2f}, {self.waypoint.y:.2f}, {self.waypoint.psi:.2f}) '
                          f'utility {self.waypoint.utility}')
        return True

    def control(self, merged: MergedState, labels: np.ndarray) -> ControlResult:
        cfg = self.cfg
        if self.waypoint is None:
            return ControlResult(ExtendedVelocity(), reason='waiting for the map')
        result = rh_solve(merged, self.waypoint, self.waypoint.path, self.mode, cfg.ctrl, self.warm_start,
                          cfg.planner, self.label)
        if not result.fault and trajectory_blocked(np.array([merged.x, merged.y]), result.solution,
                                                   cfg.ctrl.step_dt, labels, self.grid.resolution,
                                                   self.grid.origin):
            self.replan_requested = True
            return ControlResult(ExtendedVelocity(), True, result.iterations, result.cost_trace,
                                 np.zeros((0, 4)), 'predicted trajectory blocked')
        self.warm_start = None if result.fault else result.solution
        return result

    def _track_fault(self, time: float, faulted: bool, reason: str) -> bool:
        if not faulted:
            self.fault_since = None
            return False
        if self.fault_since is None:
            self.fault_since = time
            self.logger.warning(f'Controller fault: {reason}')
        return time - self.fault_since >= self.cfg.trial.fault_timeout

    def _track_contact(self, time: float) -> bool:
        if not self.world.in_contact:
            self.contact_since = None
            return False
        if self.contact_since is None:
            self.contact_since = time
        return time - self.contact_since >= self.cfg.trial.fault_timeout

    # --- loop ---

    def _record_step(self, time: float, merged: MergedState, velocity: ExtendedVelocity,
                     command: WheelCommand) -> None:
        state = self.world.state
        body_vy = float(body_twist(command, self.cfg.kin)[1])
        self.record.add_step(
            time,
            (time, merged.x, merged.y, merged.theta, merged.psi,
             merged.cov[0, 0], merged.cov[1, 1], merged.cov[2, 2]),
            (time, state.pose.x, state.pose.y, state.pose.theta, state.psi),
            (time, velocity.vx, velocity.vy, velocity.dtheta, velocity.dgamma, body_vy),
            self.world.path_length,
            self.world.wheel_rotation,
            self.world.robot_rotation,
            self.world.camera_rotation,
            self.graph.loop_count,
        )

    def _complete(self, time: float, merged: MergedState) -> None:
        self._record_step(time, merged, ExtendedVelocity(), WheelCommand(np.zeros(3), 0.0))
        self.record.complete = True
        self.logger.info(f'Exploration complete at t={time:.1f}s')

    def run(self, on_map_sample: MapCallback | None = None) -> TrialRecord:
        """
        Run the closed loop.

        :param on_map_sample: Called with (time, grid) at every map sample
        :return: The filled TrialRecord
        """
        cfg = self.cfg
        dt = cfg.ctrl.step_dt
        steps = max(1, int(round(cfg.duration / dt)))
        self.logger.info(f'Trial started: {self.env.name or "environment"}, {steps} steps')
        time = 0.0
        for k in range(steps):
            time = round(k * dt, 9)
            set_sim_time(self.label, time)
            try:
                frame = self.sense(k, time)
                merged = self.map_and_graph(frame, self.estimate(k, frame))
            except EstimationError as e:
                self.logger.error(f'Estimation failed: {e}')
                self.record.fail(REASON_ESTIMATION)
                break

            samples_before = len(self.record.map_samples)
            self.sample_map(time)
            if on_map_sample is not None and len(self.record.map_samples) > samples_before:
                on_map_sample(time, self.grid)

            slam = cfg.slam
            labels = classify_labels(self.grid, slam.free_threshold, slam.occupied_threshold)
            if not self.plan(time, merged, labels):
                self._complete(time, merged)
                break
            result = self.control(merged, labels)
            if result.fault and self.replan_requested:
                if not self.plan(time, merged, labels, force=True):
                    self._complete(time, merged)
                    break
                result = self.control(merged, labels)
            velocity = result.velocity
            command = saturate(extended_wheel_speeds(merged.theta, velocity, cfg.kin), cfg.kin)
            self._record_step(time, merged, velocity, command)
            if self._track_fault(time, result.fault, result.reason):
                self.record.fail(REASON_CONTROLLER_FAULT)
                self.logger.warning(f'Controller fault persisted {cfg.trial.fault_timeout:.1f}s, trial failed')
                break

            self.command = command
            self.world.step(command, dt)
            if self._track_contact(self.world.state.time):
                self.record.fail(REASON_COLLISION)
                self.logger.warning(f'Contact persisted {cfg.trial.fault_timeout:.1f}s, trial failed')
                break

        if self.record.times:
            self.sample_map(self.record.times[-1], force=True)
        set_sim_time(self.label, None)
        self.record.final_labels = classify_labels(self.grid, cfg.slam.free_threshold, cfg.slam.occupied_threshold)
        self.record.gt_labels = self.gt_labels
        self.logger.info(f'Trial finished: {self.record.status}, {self.record.steps} steps, '
                         f'{self.graph.loop_count} loop closures, path {self.world.path_length:.2f} m')
        release_trial_loggers(self.label)
        return self.record

    def write(self, directory: str | Path) -> Path:
        """
        Write the trial's artifacts into ``directory``.

        trial.csv always; estimates.csv, map.pgm / map_gt.pgm and graph.g2o as
        configured under ``record``.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        rec = self.cfg.record
        write_trial_csv(directory / 'trial.csv', self.record, rec.window)
        if rec.write_estimates:
            write_estimates_csv(directory / 'estimates.csv', self.record)
        if rec.write_maps and self.record.final_labels is not None:
            write_labels_pgm(directory / 'map.pgm', self.record.final_labels)
            write_labels_pgm(directory / 'map_gt.pgm', self.gt_labels)
        if rec.write_graph:
            write_g2o(directory / 'graph.g2o', self.graph)
        return directory


def trial_directory(out_dir: str | Path, label: str, seed: int) -> Path:
    return Path(out_dir) / label / f'seed_{seed:04d}'


def run_trial(cfg: ExperimentConfig, seed: int, env: Environment | None = None,
              out_dir: str | Path | None = None, on_map_sample: MapCallback | None = None) -> TrialRecord:
    """
    Run one trial; deterministic under (cfg, seed).

    :param cfg: Experiment configuration
    :param seed: Noise seed
    :param env: Preloaded environment
    :param out_dir: When set, artifacts go to ``out_dir/<label>/seed_<seed>``
    :param on_map_sample: Called with (time, grid) at every map sample
    :return: TrialRecord; failed trials are marked, not raised
    """
    trial = Trial(cfg, seed, env)
    record = trial.run(on_map_sample)
    if out_dir is not None:
        trial.write(trial_directory(out_dir, cfg.label, seed))
    return record
