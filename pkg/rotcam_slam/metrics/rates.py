"""Quantities normalized by the distance traveled."""

from __future__ import annotations

MIN_PATH_LENGTH = 0.01


def per_meter(value: float, path_len: float, min_path: float = MIN_PATH_LENGTH) -> float | None:
    """value / path_len, or None (missing) when the robot barely moved."""
    if not path_len > min_path:
        return None
    return float(value) / float(path_len)


def loops_per_meter(n_loops: int, path_len: float) -> float | None:
    return per_meter(n_loops, path_len)


def wheel_rotation_per_meter(acc_rad: float, path_len: float) -> float | None:
    return per_meter(acc_rad, path_len)


def robot_rotation_per_meter(acc_rad: float, path_len: float) -> float | None:
    return per_meter(acc_rad, path_len)


def camera_rotation_per_meter(acc_rad: float, path_len: float) -> float | None:
    return per_meter(acc_rad, path_len)
