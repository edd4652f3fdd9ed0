#!/usr/bin/env python3

"""
Pure utility functions shared by all subsystems.

Only depends on utility/exceptions.py which has no other project dependencies.
"""

import math
from collections.abc import Iterable

import numpy as np

from rotcam_slam.utility.exceptions import InvalidInputError


def wrap_angle(angle):
    """
    Wrap an angle (scalar or array) to (-pi, pi].

    :param angle: Angle in radians
    :return: Wrapped angle, same type as the input
    """
    if np.ndim(angle) == 0:
        angle = float(angle)
        if -math.pi < angle <= math.pi:
            return angle
        return math.pi - (math.pi - angle) % (2.0 * math.pi)
    a = np.asarray(angle, dtype=float)
    return math.pi - np.mod(math.pi - a, 2.0 * math.pi)


def require_finite(name: str, *values) -> None:
    """
    Raise InvalidInputError unless every value (scalar or array) is finite.

    :param name: What is being checked, used in the message
    :param values: Scalars or array-likes
    """
    for value in values:
        if not np.all(np.isfinite(np.asarray(value, dtype=float))):
            raise InvalidInputError(f'{name} must be finite, got {value!r}')


def require_positive_dt(dt: float) -> float:
    """
    Validate a time step.

    :param dt: Time step in seconds
    :return: dt as float
    """
    if not math.isfinite(dt) or dt <= 0.0:
        raise InvalidInputError(f'Time step must be positive, got {dt!r}')
    return float(dt)


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Return (M + M^T) / 2."""
    return 0.5 * (matrix + matrix.T)


def format_float(value: float | None) -> str:
    """
    Format a float for CSV output with a stable, platform-independent repr.

    Missing values (None, NaN) become an empty field.
    """
    if value is None:
        return ''
    value = float(value)
    if math.isnan(value):
        return ''
    return f'{value:.10g}'


def mean_std(values: Iterable[float]) -> tuple[float, float]:
    """
    Mean and sample standard deviation (ddof 1).

    :param values: Sample values
    :return: (mean, std); std is 0 for fewer than two samples, NaN mean for none
    """
    data = np.fromiter(values, dtype=float)
    if data.size == 0:
        return math.nan, math.nan
    if data.size < 2:
        return float(data[0]), 0.0
    return float(np.mean(data)), float(np.std(data, ddof=1))
