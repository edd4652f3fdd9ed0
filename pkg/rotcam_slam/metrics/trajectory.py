#!/usr/bin/env python3

"""
Absolute trajectory error.

Both trajectories live in the map frame, so no alignment transform is
estimated before the error is taken.
"""

from __future__ import annotations

import numpy as np

from rotcam_slam.utility.exceptions import MetricError

ASSOCIATION_TOLERANCE = 0.05


def associate(est_times: np.ndarray, gt_times: np.ndarray,
              tolerance: float = ASSOCIATION_TOLERANCE) -> tuple[np.ndarray, np.ndarray]:
    """
    Nearest ground-truth sample for every estimate within ``tolerance`` seconds.

    :param est_times: Sorted estimate timestamps
    :param gt_times: Sorted ground-truth timestamps
    :return: (estimate indices, ground-truth indices)
    """
    est_times = np.asarray(est_times, dtype=float)
    gt_times = np.asarray(gt_times, dtype=float)
    if est_times.size == 0 or gt_times.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    right = np.clip(np.searchsorted(gt_times, est_times), 0, gt_times.size - 1)
    left = np.clip(right - 1, 0, gt_times.size - 1)
    pick_left = np.abs(est_times - gt_times[left]) <= np.abs(gt_times[right] - est_times)
    nearest = np.where(pick_left, left, right)
    keep = np.abs(gt_times[nearest] - est_times) <= tolerance
    return np.flatnonzero(keep), nearest[keep]


def ate_rmse(est_traj: np.ndarray, gt_traj: np.ndarray, tolerance: float = ASSOCIATION_TOLERANCE) -> float:
    """
    Root mean square of the position error over associated pairs.

    :param est_traj: (N, >=3) rows of (t, x, y, ...)
    :param gt_traj: (M, >=3) rows of (t, x, y, ...)
    :raise MetricError: With fewer than two associated pairs
    :return: ATE RMSE in meters
    """
    est = np.atleast_2d(np.asarray(est_traj, dtype=float))
    gt = np.atleast_2d(np.asarray(gt_traj, dtype=float))
    i, j = associate(est[:, 0], gt[:, 0], tolerance)
    if i.size < 2:
        raise MetricError(f'ATE needs at least two associated poses, got {i.size}')
    diff = est[i, 1:3] - gt[j, 1:3]
    return float(np.sqrt(np.mean(np.sum(diff ** 2, axis=1))))
