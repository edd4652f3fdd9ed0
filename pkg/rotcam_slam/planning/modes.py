#!/usr/bin/env python3

"""
Platform modes and their velocity constraints.

    A   base only, camera fixed to the base:       dgamma = 0
    HH  base and camera rotate together:           |dtheta|, |dgamma|, |dtheta + dgamma| <= omega_max
    OC  only the camera rotates:                   dtheta = 0
    Y0  no lateral body velocity (v_y = 0):        base heading from pure pursuit,
                                                   camera tracks the heading reference

Every mode limits the translation speed to v_max and the world-frame
camera rate |dtheta + dgamma| to omega_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from rotcam_slam.kinematics.omni import ExtendedVelocity
from rotcam_slam.utility.config import ControllerConfig
from rotcam_slam.utility.exceptions import InvalidParameterError

FEASIBILITY_TOLERANCE = 1e-9


class PlatformMode(str, Enum):
    A = 'A'
    HH = 'HH'
    OC = 'OC'
    Y0 = 'Y0'

    @classmethod
    def parse(cls, value: str | PlatformMode) -> PlatformMode:
        try:
            return cls(value)
        except ValueError:
            raise InvalidParameterError(f'Unknown platform mode {value!r}') from None

    def label(self, merged: bool = True) -> str:
        """Comparison label; the non-composed variant gets an ``_NC`` suffix."""
        return self.value if merged else f'{self.value}_NC'


@dataclass(frozen=True)
class ConstraintReport:
    """Constraint set of a mode evaluated on one command."""
    constraints: tuple[str, ...]
    satisfied: bool
    violation: float
    projected: ExtendedVelocity


_MODE_CONSTRAINTS = {
    PlatformMode.A: ('dgamma = 0', '|dtheta| <= omega_max', '|v| <= v_max'),
    PlatformMode.HH: ('|dtheta| <= omega_max', '|dgamma| <= omega_max', '|dtheta + dgamma| <= omega_max',
                      '|v| <= v_max'),
    PlatformMode.OC: ('dtheta = 0', '|dgamma| <= omega_max', '|v| <= v_max'),
    PlatformMode.Y0: ('v_y(body) = 0', '|dtheta| <= omega_max', '|dgamma| <= omega_max',
                      '|dtheta + dgamma| <= omega_max', '|v| <= v_max'),
}


def project_speed(vx, vy, v_max: float):
    """Scale translation so that |(vx, vy)| <= v_max; works on scalars and arrays."""
    speed = np.hypot(vx, vy)
    scale = np.where(speed > v_max, v_max / np.maximum(speed, 1e-300), 1.0)
    return vx * scale, vy * scale


def _project_segment(point: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    t = np.clip(((point - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return a + t[..., None] * ab


_HEXAGON = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, -1.0]])


def project_hexagon(dtheta, dgamma, omega: float):
    """
    Euclidean projection of (dtheta, dgamma) onto
    {|dtheta| <= omega, |dgamma| <= omega, |dtheta + dgamma| <= omega}.
    """
    if omega <= 0:
        zero = np.zeros_like(np.asarray(dtheta, dtype=float))
        return zero, zero.copy()
    pts = np.stack([np.asarray(dtheta, dtype=float), np.asarray(dgamma, dtype=float)], axis=-1) / omega
    flat = pts.reshape(-1, 2)
    inside = (np.abs(flat[:, 0]) <= 1.0) & (np.abs(flat[:, 1]) <= 1.0) & (np.abs(flat.sum(axis=1)) <= 1.0)
    out = flat.copy()
    if not inside.all():
        outer = flat[~inside]
        best = None
        best_d = None
        for k in range(6):
            cand = _project_segment(outer, _HEXAGON[k], _HEXAGON[(k + 1) % 6])
            d = np.sum((cand - outer) ** 2, axis=1)
            if best is None:
                best, best_d = cand, d
            else:
                closer = d < best_d
                best[closer] = cand[closer]
                best_d = np.where(closer, d, best_d)
        out[~inside] = best
    out = out.reshape(pts.shape) * omega
    return out[..., 0], out[..., 1]


def camera_rate_box(dtheta, omega: float):
    """Bounds on dgamma given dtheta: |dgamma| <= omega and |dtheta + dgamma| <= omega."""
    return np.maximum(-omega, -omega - dtheta), np.minimum(omega, omega - dtheta)


def project_command(mode: PlatformMode, u: ExtendedVelocity, cfg: ControllerConfig,
                    theta: float = 0.0) -> ExtendedVelocity:
    """Nearest command satisfying the mode constraints (Y0 keeps the given dtheta, clipped)."""
    v, w = cfg.v_max, cfg.omega_max
    vx, vy, dtheta, dgamma = u.vx, u.vy, u.dtheta, u.dgamma
    if mode is PlatformMode.A:
        dgamma = 0.0
        dtheta = float(np.clip(dtheta, -w, w))
    elif mode is PlatformMode.HH:
        a, b = project_hexagon(dtheta, dgamma, w)
        dtheta, dgamma = float(a), float(b)
    elif mode is PlatformMode.OC:
        dtheta = 0.0
        dgamma = float(np.clip(dgamma, -w, w))
    else:
        c, s = math.cos(theta), math.sin(theta)
        speed = float(np.clip(vx * c + vy * s, 0.0, v))
        vx, vy = speed * c, speed * s
        dtheta = float(np.clip(dtheta, -w, w))
        lo, hi = camera_rate_box(dtheta, w)
        dgamma = float(np.clip(dgamma, lo, hi))
    vx, vy = project_speed(vx, vy, v)
    return ExtendedVelocity(float(vx), float(vy), dtheta, dgamma)


def constraint_violation(mode: PlatformMode, u: ExtendedVelocity, cfg: ControllerConfig,
                         theta: float = 0.0) -> float:
    """Largest violation of any constraint of the mode (0 when feasible)."""
    v, w = cfg.v_max, cfg.omega_max
    terms = [math.hypot(u.vx, u.vy) - v, abs(u.dtheta + u.dgamma) - w]
    if mode is PlatformMode.A:
        terms += [abs(u.dgamma), abs(u.dtheta) - w]
    elif mode is PlatformMode.HH:
        terms += [abs(u.dtheta) - w, abs(u.dgamma) - w]
    elif mode is PlatformMode.OC:
        terms += [abs(u.dtheta), abs(u.dgamma) - w]
    else:
        lateral = -math.sin(theta) * u.vx + math.cos(theta) * u.vy
        terms += [abs(lateral), abs(u.dtheta) - w, abs(u.dgamma) - w]
    return max(0.0, *terms)


def apply_mode_constraints(mode: PlatformMode | str, u: ExtendedVelocity, cfg: ControllerConfig,
                           theta: float = 0.0) -> ConstraintReport:
    """
    Evaluate the constraint set of a mode on a command.

    :param mode: Platform mode
    :param u: World-frame extended velocity
    :param cfg: Controller limits
    :param theta: Base heading, used by the Y0 lateral constraint
    :return: ConstraintReport with the nearest feasible command
    """
    mode = PlatformMode.parse(mode)
    violation = constraint_violation(mode, u, cfg, theta)
    return ConstraintReport(
        constraints=_MODE_CONSTRAINTS[mode],
        satisfied=violation <= FEASIBILITY_TOLERANCE,
        violation=violation,
        projected=project_command(mode, u, cfg, theta),
    )
