#!/usr/bin/env python3

"""
Time bucketing of metric samples.

Each window [k*w, (k+1)*w) takes the last sample inside it. Empty windows
repeat the previous bucket; windows before the first sample take the first
sample's value.
"""

from __future__ import annotations

import math

import numpy as np


def bucket_count(duration: float, window: float) -> int:
    return max(1, int(math.ceil(duration / window - 1e-12)))


def bucket_series(times, values, window: float = 2.0,
                  duration: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Bucket a sorted series into fixed windows.

    :param times: Sorted sample times
    :param values: Sample values
    :param window: Window length in seconds
    :param duration: Total span; defaults to the window holding the last sample
    :return: (window start times, bucket values); empty for an empty series
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size == 0:
        return np.zeros(0), np.zeros(0)
    if duration is None:
        n = int(math.floor(t[-1] / window)) + 1
    else:
        n = bucket_count(duration, window)
    index = np.floor(t / window).astype(np.int64)
    buckets = np.full(n, np.nan)
    # last sample of each run of equal window indices
    final = np.append(index[1:] != index[:-1], True) & (index >= 0) & (index < n)
    buckets[index[final]] = v[final]
    last = v[0]
    for k in range(n):
        if np.isnan(buckets[k]):
            buckets[k] = last
        else:
            last = buckets[k]
    return np.arange(n) * window, buckets
