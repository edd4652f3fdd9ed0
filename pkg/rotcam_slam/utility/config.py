#!/usr/bin/env python3

"""
Configuration dataclasses for rotcam-slam.

Provides typed configuration objects created from the nested experiment
dict (YAML file merged with dotted ``--set`` overrides and CLI flags).

Usage:
    from rotcam_slam.utility.config import ExperimentConfig, load_config

    raw = load_config('experiment.yaml', overrides=['kin.D=0.14', 'mode=HH'])
    cfg = ExperimentConfig.from_dict(raw)

    print(cfg.kin.D)
    print(cfg.ctrl.horizon_steps)
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from rotcam_slam.kinematics.omni import KinematicParams
from rotcam_slam.utility.exceptions import ConfigError, InvalidParameterError
from rotcam_slam.world.camera import CameraModel

MODES = ('A', 'HH', 'OC', 'Y0')


def _get(data: dict, key: str, default):
    """Get value from dict, treating None as missing (returns default)."""
    value = data.get(key)
    return default if value is None else value


def _get_float(data: dict, key: str, default: float) -> float:
    """Get float value from dict, raising ConfigError on garbage."""
    value = data.get(key)
    if value is None:
        return default
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f'{key} must be a number, got {value!r}') from e


def _get_int(data: dict, key: str, default: int) -> int:
    """Get int value from dict, with safe conversion."""
    value = data.get(key)
    if value is None:
        return default
    try:
        return int(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f'{key} must be an integer, got {value!r}') from e


@dataclass(frozen=True)
class WorldConfig:
    """Simulation stepping and robot footprint."""
    sim_dt: float = 0.01
    robot_radius: float = 0.2
    resolution: float = 0.05

    @classmethod
    def from_dict(cls, data: dict | None) -> WorldConfig:
        if not data:
            return cls()
        return cls(
            sim_dt=_get_float(data, 'sim_dt', 0.01),
            robot_radius=_get_float(data, 'robot_radius', 0.2),
            resolution=_get_float(data, 'resolution', 0.05),
        )


@dataclass(frozen=True)
class SensorConfig:
    """Noise and sampling of the synthetic sensors."""
    sigma_gyro: float = 0.01
    tick_size: float = math.radians(0.5)
    a_t: float = 0.02
    b_t: float = 0.001
    a_r: float = 0.02
    b_r: float = 0.0005
    sigma_wheel: float = 0.02
    lrf_rays: int = 360
    lrf_max_range: float = 12.0
    lrf_every: int = 10

    @property
    def encoder_variance(self) -> float:
        """Quantization variance of the joint encoder, tick^2 / 12."""
        return self.tick_size ** 2 / 12.0

    @classmethod
    def from_dict(cls, data: dict | None) -> SensorConfig:
        if not data:
            return cls()
        return cls(
            sigma_gyro=_get_float(data, 'sigma_gyro', 0.01),
            tick_size=math.radians(_get_float(data, 'tick_deg', 0.5)),
            a_t=_get_float(data, 'a_t', 0.02),
            b_t=_get_float(data, 'b_t', 0.001),
            a_r=_get_float(data, 'a_r', 0.02),
            b_r=_get_float(data, 'b_r', 0.0005),
            sigma_wheel=_get_float(data, 'sigma_wheel', 0.02),
            lrf_rays=_get_int(data, 'lrf_rays', 360),
            lrf_max_range=_get_float(data, 'lrf_max_range', 12.0),
            lrf_every=_get_int(data, 'lrf_every', 10),
        )


@dataclass(frozen=True)
class EstimationConfig:
    """Process noise and initial uncertainty of both filters."""
    q_position: float = 1e-6
    q_velocity: float = 1.0
    q_yaw_rate: float = 1.0
    q_camera_rate: float = 1.0
    diff_imu_variance: float = 0.01
    sync_tolerance: float = 0.005
    initial_sigma_xy: float = 0.01
    initial_sigma_theta: float = 0.01
    initial_sigma_velocity: float = 0.05

    @classmethod
    def from_dict(cls, data: dict | None) -> EstimationConfig:
        if not data:
            return cls()
        return cls(
            q_position=_get_float(data, 'q_position', 1e-6),
            q_velocity=_get_float(data, 'q_velocity', 1.0),
            q_yaw_rate=_get_float(data, 'q_yaw_rate', 1.0),
            q_camera_rate=_get_float(data, 'q_camera_rate', 1.0),
            diff_imu_variance=_get_float(data, 'diff_imu_variance', 0.01),
            sync_tolerance=_get_float(data, 'sync_tolerance', 0.005),
            initial_sigma_xy=_get_float(data, 'initial_sigma_xy', 0.01),
            initial_sigma_theta=_get_float(data, 'initial_sigma_theta', 0.01),
            initial_sigma_velocity=_get_float(data, 'initial_sigma_velocity', 0.05),
        )


@dataclass(frozen=True)
class SlamConfig:
    """Occupancy mapping, node policy, loop closure and optimizer settings."""
    l_occ: float = 0.85
    l_free: float = -0.4
    l_max: float = 4.0
    free_threshold: float = 0.35
    occupied_threshold: float = 0.65
    node_translation: float = 0.3
    node_rotation: float = 0.3
    loop_min_separation: int = 20
    loop_radius: float = 1.0
    loop_overlap: float = 0.5
    loop_sigma: tuple[float, float, float] = (0.02, 0.02, 0.01)
    max_iterations: int = 50
    tolerance: float = 1e-8

    @classmethod
    def from_dict(cls, data: dict | None) -> SlamConfig:
        if not data:
            return cls()
        sigma = data.get('loop_sigma')
        return cls(
            l_occ=_get_float(data, 'l_occ', 0.85),
            l_free=_get_float(data, 'l_free', -0.4),
            l_max=_get_float(data, 'l_max', 4.0),
            free_threshold=_get_float(data, 'free_threshold', 0.35),
            occupied_threshold=_get_float(data, 'occupied_threshold', 0.65),
            node_translation=_get_float(data, 'node_translation', 0.3),
            node_rotation=_get_float(data, 'node_rotation', 0.3),
            loop_min_separation=_get_int(data, 'loop_min_separation', 20),
            loop_radius=_get_float(data, 'loop_radius', 1.0),
            loop_overlap=_get_float(data, 'loop_overlap', 0.5),
            loop_sigma=tuple(float(s) for s in sigma) if sigma is not None else (0.02, 0.02, 0.01),
            max_iterations=_get_int(data, 'max_iterations', 50),
            tolerance=_get_float(data, 'tolerance', 1e-8),
        )


@dataclass(frozen=True)
class PlannerConfig:
    """Frontier selection and replanning."""
    min_frontier_size: int = 3
    headings: int = 36
    utility_ray_step: float = math.radians(1.0)
    max_candidates: int = 16
    replan_period: float = 2.0
    goal_tolerance: float = 0.15
    heading_tolerance: float = 0.2
    inflation_extra_cells: int = 1
    pursuit_gain: float = 1.5
    lookahead: float = 0.6

    @classmethod
    def from_dict(cls, data: dict | None) -> PlannerConfig:
        if not data:
            return cls()
        return cls(
            min_frontier_size=_get_int(data, 'min_frontier_size', 3),
            headings=_get_int(data, 'headings', 36),
            utility_ray_step=math.radians(_get_float(data, 'utility_ray_step_deg', 1.0)),
            max_candidates=_get_int(data, 'max_candidates', 16),
            replan_period=_get_float(data, 'replan_period', 2.0),
            goal_tolerance=_get_float(data, 'goal_tolerance', 0.15),
            heading_tolerance=_get_float(data, 'heading_tolerance', 0.2),
            inflation_extra_cells=_get_int(data, 'inflation_extra_cells', 1),
            pursuit_gain=_get_float(data, 'pursuit_gain', 1.5),
            lookahead=_get_float(data, 'lookahead', 0.6),
        )


@dataclass(frozen=True)
class ControllerConfig:
    """Receding-horizon controller: horizon, limits, weights and solver settings."""
    horizon_steps: int = 20
    step_dt: float = 0.1
    v_max: float = 1.0
    omega_max: float = 1.0
    w_p: float = 1.0
    w_psi: float = 0.5
    w_u: float = 0.05
    max_iterations: int = 60
    tolerance: float = 1e-6

    @classmethod
    def from_dict(cls, data: dict | None) -> ControllerConfig:
        if not data:
            return cls()
        return cls(
            horizon_steps=_get_int(data, 'horizon_steps', 20),
            step_dt=_get_float(data, 'step_dt', 0.1),
            v_max=_get_float(data, 'v_max', 1.0),
            omega_max=_get_float(data, 'omega_max', 1.0),
            w_p=_get_float(data, 'w_p', 1.0),
            w_psi=_get_float(data, 'w_psi', 0.5),
            w_u=_get_float(data, 'w_u', 0.05),
            max_iterations=_get_int(data, 'max_iterations', 60),
            tolerance=_get_float(data, 'tolerance', 1e-6),
        )


@dataclass(frozen=True)
class TrialConfig:
    """Failure policy of a single trial."""
    fault_timeout: float = 5.0

    @classmethod
    def from_dict(cls, data: dict | None) -> TrialConfig:
        if not data:
            return cls()
        return cls(fault_timeout=_get_float(data, 'fault_timeout', 5.0))


@dataclass(frozen=True)
class RecordConfig:
    """What a trial records and writes."""
    window: float = 2.0
    map_sample_period: float = 1.0
    write_estimates: bool = True
    write_maps: bool = True
    write_graph: bool = True

    @classmethod
    def from_dict(cls, data: dict | None) -> RecordConfig:
        if not data:
            return cls()
        return cls(
            window=_get_float(data, 'window', 2.0),
            map_sample_period=_get_float(data, 'map_sample_period', 1.0),
            write_estimates=bool(_get(data, 'write_estimates', True)),
            write_maps=bool(_get(data, 'write_maps', True)),
            write_graph=bool(_get(data, 'write_graph', True)),
        )


@dataclass(frozen=True)
class BatchConfig:
    """Comparison matrix of a batch: modes times merged flags."""
    modes: tuple[str, ...] = MODES
    merged: tuple[bool, ...] = (True, False)

    @classmethod
    def from_dict(cls, data: dict | None) -> BatchConfig:
        if not data:
            return cls()
        modes = data.get('modes')
        merged = data.get('merged')
        return cls(
            modes=tuple(str(m) for m in modes) if modes is not None else MODES,
            merged=tuple(bool(m) for m in merged) if merged is not None else (True, False),
        )


@dataclass(frozen=True)
class EnvConfig:
    """Environment file and its sidecar geometry."""
    path: str = ''
    cell_size: float | None = None
    origin: tuple[float, float] = (0.0, 0.0)
    start: tuple[float, ...] | None = None

    @classmethod
    def from_dict(cls, data: dict | None) -> EnvConfig:
        if not data:
            return cls()
        origin = data.get('origin')
        start = data.get('start')
        cell_size = data.get('cell_size')
        return cls(
            path=str(_get(data, 'path', '')),
            cell_size=float(cell_size) if cell_size is not None else None,
            origin=(float(origin[0]), float(origin[1])) if origin is not None else (0.0, 0.0),
            start=tuple(float(s) for s in start) if start is not None else None,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Main configuration of a trial or a batch."""
    mode: str = 'A'
    merged: bool = True
    duration: float = 600.0
    trials: int = 20
    seed: int = 0
    out_dir: str = 'results'
    workers: int = 1

    env: EnvConfig = field(default_factory=EnvConfig)
    kin: KinematicParams = field(default_factory=KinematicParams)
    world: WorldConfig = field(default_factory=WorldConfig)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    camera: CameraModel = field(default_factory=CameraModel)
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    slam: SlamConfig = field(default_factory=SlamConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    ctrl: ControllerConfig = field(default_factory=ControllerConfig)
    trial: TrialConfig = field(default_factory=TrialConfig)
    record: RecordConfig = field(default_factory=RecordConfig)
    batch: BatchConfig = field(default_factory=BatchConfig)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise InvalidParameterError(f'mode must be one of {", ".join(MODES)}, got {self.mode!r}')
        if not self.duration > 0:
            raise InvalidParameterError('duration must be positive')
        if self.trials < 1:
            raise InvalidParameterError('trials must be at least 1')

    @property
    def label(self) -> str:
        """Comparison label, e.g. ``HH`` or ``HH_NC``."""
        return self.mode if self.merged else f'{self.mode}_NC'

    @classmethod
    def from_dict(cls, data: dict | None) -> ExperimentConfig:
        """Create ExperimentConfig from the merged config dict."""
        if not data:
            return cls()
        return cls(
            mode=str(_get(data, 'mode', 'A')),
            merged=bool(_get(data, 'merged', True)),
            duration=_get_float(data, 'duration', 600.0),
            trials=_get_int(data, 'trials', 20),
            seed=_get_int(data, 'seed', 0),
            out_dir=str(_get(data, 'out_dir', 'results')),
            workers=_get_int(data, 'workers', 1),
            env=EnvConfig.from_dict(data.get('env')),
            kin=KinematicParams.from_dict(data.get('kin')),
            world=WorldConfig.from_dict(data.get('world')),
            sensors=SensorConfig.from_dict(data.get('sensors')),
            camera=CameraModel.from_dict(data.get('camera')),
            estimation=EstimationConfig.from_dict(data.get('estimation')),
            slam=SlamConfig.from_dict(data.get('slam')),
            planner=PlannerConfig.from_dict(data.get('planner')),
            ctrl=ControllerConfig.from_dict(data.get('ctrl')),
            trial=TrialConfig.from_dict(data.get('trial')),
            record=RecordConfig.from_dict(data.get('record')),
            batch=BatchConfig.from_dict(data.get('batch')),
        )


def read_config_file(path: str | Path) -> dict[str, Any]:
    """
    Read a YAML experiment file.

    :param path: File path
    :return: Nested dict (empty for an empty file)
    """
    path = Path(path)
    try:
        with path.open('r', encoding='utf-8') as fh:
            data = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f'Cannot read configuration file {path}: {e}') from e
    except yaml.YAMLError as e:
        raise ConfigError(f'Invalid YAML in {path}: {e}') from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f'{path} must contain a mapping at top level')
    return _expand_dotted(data)


def _expand_dotted(data: dict[str, Any]) -> dict[str, Any]:
    """Turn ``{'kin.D': 0.14}`` into ``{'kin': {'D': 0.14}}`` recursively."""
    result: dict[str, Any] = {}
    for key, value in data.items():
        if isinstance(value, dict):
            value = _expand_dotted(value)
        set_dotted(result, str(key), value)
    return result


def set_dotted(data: dict[str, Any], key: str, value: Any) -> None:
    """Set ``data['a']['b'] = value`` for the dotted key ``a.b``, merging nested dicts."""
    parts = key.split('.')
    node = data
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = node[part] = {}
        elif not isinstance(child, dict):
            raise ConfigError(f'Cannot set {key}: {part} is not a section')
        node = child
    last = parts[-1]
    if isinstance(value, dict) and isinstance(node.get(last), dict):
        for sub_key, sub_value in value.items():
            set_dotted(node[last], sub_key, sub_value)
    else:
        node[last] = value


def parse_override(item: str) -> tuple[str, Any]:
    """
    Parse a ``--set key=value`` override; the value is read as a YAML scalar.

    :param item: Override string
    :return: (dotted key, parsed value)
    """
    if '=' not in item:
        raise ConfigError(f'Override {item!r} must look like key=value')
    key, raw = item.split('=', 1)
    key = key.strip()
    if not key:
        raise ConfigError(f'Override {item!r} has an empty key')
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as e:
        raise ConfigError(f'Cannot parse value of override {key}: {e}') from e
    return key, value


def load_config(
    path: str | Path | None = None,
    overrides: list[str] | None = None,
    flags: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """
    Build the raw experiment dict: defaults < file < ``--set`` overrides < CLI flags.

    Flags whose value is None are ignored.
    """
    data: dict[str, Any] = read_config_file(path) if path else {}
    data = copy.deepcopy(data)
    for item in overrides or []:
        key, value = parse_override(item)
        set_dotted(data, key, value)
    for key, value in (flags or {}).items():
        if value is not None:
            set_dotted(data, key, value)
    return data
