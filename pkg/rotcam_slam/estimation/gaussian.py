#!/usr/bin/env python3

"""
Gaussian estimates and the generic EKF transition functions.

Both functions are pure: they take an estimate and return a new one.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np

from rotcam_slam.utility.exceptions import EstimationError, InvalidInputError
from rotcam_slam.utility.pure import require_finite, require_positive_dt, symmetrize, wrap_angle

PSD_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class GaussianEstimate:
    """Mean vector and covariance at a timestamp."""
    mean: np.ndarray
    cov: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise InvalidInputError(f'Covariance shape {cov.shape} does not match mean of size {mean.size}')
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'cov', cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    def variance(self, index: int) -> float:
        return float(self.cov[index, index])

    def at(self, time: float) -> GaussianEstimate:
        return replace(self, time=time)


class MotionModel(Protocol):
    """Process model used by ``ekf_predict``."""

    def propagate(self, mean: np.ndarray, dt: float) -> np.ndarray: ...

    def jacobian(self, mean: np.ndarray, dt: float) -> np.ndarray: ...

    def noise(self, mean: np.ndarray, dt: float) -> np.ndarray: ...


class ConstantModel:
    """x' = x with Q = q * I * dt."""

    def __init__(self, dim: int, q: float = 0.0):
        self.dim = dim
        self.q = q

    def propagate(self, mean: np.ndarray, dt: float) -> np.ndarray:
        return mean.copy()

    def jacobian(self, mean: np.ndarray, dt: float) -> np.ndarray:
        return np.eye(self.dim)

    def noise(self, mean: np.ndarray, dt: float) -> np.ndarray:
        return np.eye(self.dim) * self.q * dt


def check_psd(cov: np.ndarray, what: str = 'covariance') -> np.ndarray:
    """
    Symmetrize and verify positive semi-definiteness.

    :return: The symmetrized matrix
    :raise EstimationError: On a negative eigenvalue beyond tolerance or non-finite entries
    """
    cov = symmetrize(cov)
    if not np.all(np.isfinite(cov)):
        raise EstimationError(f'{what} has non-finite entries')
    if cov.size:
        scale = max(1.0, float(np.max(np.abs(np.diag(cov)))))
        if float(np.min(np.linalg.eigvalsh(cov))) < -PSD_TOLERANCE * scale:
            raise EstimationError(f'{what} is not positive semi-definite')
    return cov


def ekf_predict(est: GaussianEstimate, model: MotionModel, dt: float) -> GaussianEstimate:
    """
    Propagate an estimate through a motion model.

    mean' = f(mean), cov' = F cov F^T + Q with F the model Jacobian.

    :param est: Prior estimate
    :param model: Motion model
    :param dt: Time step, must be positive
    :return: Predicted estimate at est.time + dt
    """
    dt = require_positive_dt(dt)
    mean = model.propagate(est.mean, dt)
    jac = model.jacobian(est.mean, dt)
    cov = jac @ est.cov @ jac.T + model.noise(est.mean, dt)
    return GaussianEstimate(mean, check_psd(cov, 'predicted covariance'), est.time + dt)


def ekf_update(
    est: GaussianEstimate,
    z,
    H: np.ndarray,
    R: np.ndarray,
    angular: Sequence[int] = (),
    wrap_state: Sequence[int] = (),
) -> GaussianEstimate:
    """
    Kalman measurement update with Joseph-form covariance.

    :param est: Prior estimate
    :param z: Measurement vector
    :param H: Measurement matrix
    :param R: Measurement covariance
    :param angular: Measurement rows whose residual is wrapped to (-pi, pi]
    :param wrap_state: State components wrapped after the update
    :return: Posterior estimate (same timestamp)
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    require_finite('measurement', z)
    check_psd(R, 'measurement covariance')

    residual = z - H @ est.mean
    for row in angular:
        residual[row] = wrap_angle(residual[row])

    S = H @ est.cov @ H.T + R
    try:
        if np.linalg.cond(S) > 1e15:
            raise np.linalg.LinAlgError('ill-conditioned')
        K = np.linalg.solve(S, H @ est.cov).T
    except np.linalg.LinAlgError as e:
        raise EstimationError('Innovation covariance is singular') from e

    mean = est.mean + K @ residual
    for index in wrap_state:
        mean[index] = wrap_angle(mean[index])
    I_KH = np.eye(est.dim) - K @ H
    cov = I_KH @ est.cov @ I_KH.T + K @ R @ K.T
    return GaussianEstimate(mean, check_psd(cov, 'posterior covariance'), est.time)
