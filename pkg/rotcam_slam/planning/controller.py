#!/usr/bin/env python3

"""
Receding-horizon controller over the extended velocity.

Decision variables are N world-frame commands u_k = (vx, vy, dtheta, dgamma)
held for one step each. Positions and the camera heading follow by summation:

    p_k   = p_0   + dt * sum_{j<k} (vx_j, vy_j)
    psi_k = psi_0 + dt * sum_{j<k} (dtheta_j + dgamma_j)

The cost is

    J = sum_k  w_p |p_k - r_k|^2 + w_psi wrap(psi_k - psi_ref)^2 + w_u |u_k|^2

with r_k a carrot moving along the path at v_max. J is minimized by projected
gradient descent with an Armijo line search; each mode supplies the Euclidean
projection onto its constraint set. In Y0 the base rate follows a pure-pursuit
law and only the speed along the heading and the camera rate are free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rotcam_slam.estimation.merge import MergedState
from rotcam_slam.kinematics.omni import ExtendedVelocity
from rotcam_slam.planning.modes import PlatformMode, camera_rate_box, project_hexagon, project_speed
from rotcam_slam.planning.paths import point_along
from rotcam_slam.planning.waypoint import Waypoint
from rotcam_slam.slam.occupancy import CellClass
from rotcam_slam.utility.config import ControllerConfig, PlannerConfig
from rotcam_slam.utility.logging_config import Subject, get_sim_logger
from rotcam_slam.utility.pure import wrap_angle

ARMIJO_SIGMA = 1e-4
MAX_BACKTRACKS = 30


@dataclass(frozen=True, eq=False)
class ControlResult:
    """First command of the horizon plus solver diagnostics."""
    velocity: ExtendedVelocity
    fault: bool = False
    iterations: int = 0
    cost_trace: list[float] = field(default_factory=list)
    solution: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    reason: str = ''


@dataclass(frozen=True, eq=False)
class _Problem:
    p0: np.ndarray
    psi0: float
    psi_ref: float
    refs: np.ndarray
    dt: float
    w_p: float
    w_psi: float
    w_u: float


def reference_polyline(position: np.ndarray, waypoint: Waypoint, path: np.ndarray | None) -> np.ndarray:
    """
    Polyline from the robot to the waypoint.

    The path vertices up to the one closest to the robot are dropped and the
    robot position becomes the first vertex.
    """
    goal = waypoint.position
    if path is None or len(path) == 0:
        return np.vstack((position, goal))
    path = np.asarray(path, dtype=float)
    nearest = int(np.argmin(np.hypot(*(path - position).T)))
    points = np.vstack((position, path[nearest + 1:]))
    if np.hypot(*(points[-1] - goal)) > 1e-9:
        points = np.vstack((points, goal))
    return points


def arc_position(points: np.ndarray, query: np.ndarray) -> float:
    """Arc length of the point on the polyline closest to ``query``."""
    if points.shape[0] < 2:
        return 0.0
    a = points[:-1]
    ab = np.diff(points, axis=0)
    seg = np.hypot(*ab.T)
    with np.errstate(divide='ignore', invalid='ignore'):
        t = np.where(seg > 0, np.einsum('ij,ij->i', query - a, ab) / seg ** 2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * ab
    k = int(np.argmin(np.hypot(*(closest - query).T)))
    return float(np.sum(seg[:k]) + t[k] * seg[k])


def pure_pursuit_rate(position: np.ndarray, theta: float, points: np.ndarray, lookahead: float, gain: float,
                      omega_max: float) -> tuple[float, float]:
    """
    Base rate steering the heading toward the lookahead point.

    :return: (dtheta, alpha) with alpha the bearing of the lookahead point relative to theta
    """
    s = arc_position(points, position)
    target = point_along(points, s + lookahead)
    offset = target - position
    if math.hypot(offset[0], offset[1]) < 1e-6:
        return 0.0, 0.0
    alpha = wrap_angle(math.atan2(offset[1], offset[0]) - theta)
    return float(np.clip(gain * alpha, -omega_max, omega_max)), float(alpha)


def pursuit_schedule(position: np.ndarray, theta: float, points: np.ndarray, cfg: ControllerConfig,
                     pursuit: PlannerConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Roll the pure-pursuit law over the horizon.

    :return: (dtheta_k, theta_k, s_max_k) where theta_k is the heading during
        step k and s_max_k the admissible forward speed
    """
    n, dt = cfg.horizon_steps, cfg.step_dt
    rates = np.zeros(n)
    thetas = np.zeros(n)
    speeds = np.zeros(n)
    q = np.asarray(position, dtype=float).copy()
    th = theta
    for k in range(n):
        rate, alpha = pure_pursuit_rate(q, th, points, pursuit.lookahead, pursuit.pursuit_gain, cfg.omega_max)
        thetas[k] = th
        rates[k] = rate
        speeds[k] = cfg.v_max * max(0.0, math.cos(alpha))
        remaining = np.hypot(*(points[-1] - q))
        step = min(speeds[k] * dt, remaining)
        q = q + step * np.array([math.cos(th), math.sin(th)])
        th = th + rate * dt
    return rates, thetas, speeds


def _project(mode: PlatformMode, u: np.ndarray, cfg: ControllerConfig, y0: tuple | None) -> np.ndarray:
    v, w = cfg.v_max, cfg.omega_max
    out = u.copy()
    if mode is PlatformMode.Y0:
        rates, thetas, speeds = y0
        c, s = np.cos(thetas), np.sin(thetas)
        speed = np.clip(out[:, 0] * c + out[:, 1] * s, 0.0, speeds)
        out[:, 0] = speed * c
        out[:, 1] = speed * s
        out[:, 2] = rates
        lo, hi = camera_rate_box(rates, w)
        out[:, 3] = np.clip(out[:, 3], lo, hi)
        return out
    out[:, 0], out[:, 1] = project_speed(out[:, 0], out[:, 1], v)
    if mode is PlatformMode.A:
        out[:, 2] = np.clip(out[:, 2], -w, w)
        out[:, 3] = 0.0
    elif mode is PlatformMode.HH:
        out[:, 2], out[:, 3] = project_hexagon(out[:, 2], out[:, 3], w)
    else:
        out[:, 2] = 0.0
        out[:, 3] = np.clip(out[:, 3], -w, w)
    return out


def _reverse_cumsum(a: np.ndarray) -> np.ndarray:
    return np.flip(np.cumsum(np.flip(a, axis=0), axis=0), axis=0)


def _cost_and_gradient(u: np.ndarray, prob: _Problem) -> tuple[float, np.ndarray]:
    dt = prob.dt
    positions = prob.p0 + dt * np.cumsum(u[:, :2], axis=0)
    pos_err = positions - prob.refs
    psi = prob.psi0 + dt * np.cumsum(u[:, 2] + u[:, 3])
    psi_err = wrap_angle(psi - prob.psi_ref)
    cost = (prob.w_p * float(np.sum(pos_err ** 2)) + prob.w_psi * float(np.sum(psi_err ** 2))
            + prob.w_u * float(np.sum(u ** 2)))
    grad = 2.0 * prob.w_u * u
    grad[:, :2] += 2.0 * prob.w_p * dt * _reverse_cumsum(pos_err)
    heading = 2.0 * prob.w_psi * dt * _reverse_cumsum(psi_err)
    grad[:, 2] += heading
    grad[:, 3] += heading
    return cost, grad


def _step_size(prob: _Problem, n: int) -> float:
    lipschitz = 2.0 * (prob.w_p + 2.0 * prob.w_psi) * prob.dt ** 2 * n * n + 2.0 * prob.w_u
    return 4.0 / max(lipschitz, 1e-12)


def _initial_guess(warm_start: np.ndarray | None, n: int) -> np.ndarray:
    if warm_start is None or np.shape(warm_start) != (n, 4) or not np.all(np.isfinite(warm_start)):
        return np.zeros((n, 4))
    shifted = np.empty((n, 4))
    shifted[:-1] = warm_start[1:]
    shifted[-1] = warm_start[-1]
    return shifted


def _fault(reason: str, n: int, logger) -> ControlResult:
    logger.warning(f'Controller fault: {reason}')
    return ControlResult(ExtendedVelocity(), fault=True, solution=np.zeros((max(n, 0), 4)), reason=reason)


def rh_solve(
    state: MergedState,
    waypoint: Waypoint,
    path: np.ndarray | None,
    mode: PlatformMode | str,
    cfg: ControllerConfig,
    warm_start: np.ndarray | None = None,
    pursuit: PlannerConfig | None = None,
    trial: str | None = None,
) -> ControlResult:
    """
    Solve the horizon problem and return its first command.

    :param state: Merged estimate; x, y and psi drive the cost, theta the Y0 schedule
    :param waypoint: Goal position and camera heading reference
    :param path: (k, 2) path points leading to the waypoint
    :param mode: Platform mode
    :param cfg: Horizon, limits, weights and solver settings
    :param warm_start: Previous solution, shifted by one step before use
    :param pursuit: Pure-pursuit gain and lookahead for Y0
    :return: ControlResult; a zero command with ``fault`` set when the problem is infeasible
    """
    logger = get_sim_logger(Subject.CONTROL, trial)
    mode = PlatformMode.parse(mode)
    pursuit = pursuit or PlannerConfig()
    n = cfg.horizon_steps
    if n < 1 or not cfg.step_dt > 0:
        return _fault('empty horizon', n, logger)
    if cfg.v_max < 0 or cfg.omega_max < 0:
        return _fault('negative velocity limits', n, logger)
    if not all(math.isfinite(v) for v in (state.x, state.y, state.theta, state.psi)):
        return _fault('non-finite state', n, logger)

    position = np.array([state.x, state.y])
    points = reference_polyline(position, waypoint, path)
    refs = np.array([point_along(points, (k + 1) * cfg.v_max * cfg.step_dt) for k in range(n)])
    prob = _Problem(position, state.psi, waypoint.psi, refs, cfg.step_dt, cfg.w_p, cfg.w_psi, cfg.w_u)
    y0 = pursuit_schedule(position, state.theta, points, cfg, pursuit) if mode is PlatformMode.Y0 else None

    u = _project(mode, _initial_guess(warm_start, n), cfg, y0)
    cost, grad = _cost_and_gradient(u, prob)
    trace = [cost]
    t0 = _step_size(prob, n)
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        t = t0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            candidate = _project(mode, u - t * grad, cfg, y0)
            new_cost, new_grad = _cost_and_gradient(candidate, prob)
            if new_cost <= cost + ARMIJO_SIGMA * float(np.sum(grad * (candidate - u))):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        change = float(np.max(np.abs(candidate - u)))
        u, cost, grad = candidate, new_cost, new_grad
        trace.append(cost)
        if change < cfg.tolerance:
            break

    velocity = ExtendedVelocity.from_array(u[0])
    logger.debug(f'{mode.value}: cost {trace[0]:.4g} -> {trace[-1]:.4g} in {iterations} iterations, '
                 f'u0 = ({velocity.vx:.3f}, {velocity.vy:.3f}, {velocity.dtheta:.3f}, {velocity.dgamma:.3f})')
    return ControlResult(velocity, False, iterations, trace, u)


def predicted_positions(position: np.ndarray, solution: np.ndarray, dt: float) -> np.ndarray:
    """Start position followed by the N predicted positions."""
    steps = dt * np.cumsum(solution[:, :2], axis=0)
    return np.vstack((position, position + steps))


def trajectory_blocked(position: np.ndarray, solution: np.ndarray, dt: float, labels: np.ndarray,
                       resolution: float, origin: tuple[float, float]) -> bool:
    """
    True when the predicted polyline passes through a cell classified occupied
    or leaves the map. The current position itself is not checked.
    """
    points = predicted_positions(np.asarray(position, dtype=float), solution, dt)
    samples: list[np.ndarray] = []
    for a, b in zip(points[:-1], points[1:]):
        count = max(1, int(math.ceil(np.hypot(*(b - a)) / (0.5 * resolution))))
        t = np.arange(1, count + 1)[:, None] / count
        samples.append(a + t * (b - a))
    if not samples:
        return False
    pts = np.vstack(samples)
    cols = np.floor((pts[:, 0] - origin[0]) / resolution).astype(np.int64)
    rows = np.floor((pts[:, 1] - origin[1]) / resolution).astype(np.int64)
    inside = (rows >= 0) & (rows < labels.shape[0]) & (cols >= 0) & (cols < labels.shape[1])
    if not inside.all():
        return True
    return bool(np.any(labels[rows, cols] == CellClass.OCCUPIED))
