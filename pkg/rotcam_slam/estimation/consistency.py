#!/usr/bin/env python3

"""
Filter consistency statistics. The Monte-Carlo driver over trials lives in
:mod:`rotcam_slam.monte_carlo`.
"""

from __future__ import annotations

import numpy as np
from scipy import stats


def nees(error, cov) -> float:
    """Normalized estimation error squared e^T P^-1 e."""
    error = np.asarray(error, dtype=float)
    return float(error @ np.linalg.solve(np.asarray(cov, dtype=float), error))


def chi2_band(dof: int, runs: int, confidence: float = 0.95) -> tuple[float, float]:
    """
    Two-sided band for the NEES averaged over ``runs`` independent runs.

    runs * mean(NEES) ~ chi2(runs * dof), so the band is the chi-square
    quantiles divided by runs.
    """
    tail = (1.0 - confidence) / 2.0
    total = dof * runs
    return (float(stats.chi2.ppf(tail, total)) / runs,
            float(stats.chi2.ppf(1.0 - tail, total)) / runs)
