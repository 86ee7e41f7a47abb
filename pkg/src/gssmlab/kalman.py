"""Recursive baseline estimators: linear Kalman filter and EKF update."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import (
    DiscreteLinearSystem,
    EstimationError,
    GaussianBelief,
    NonlinearMeasurementModel,
    symmetrize,
)
from .series import EstimateSeries

_COND_LIMIT = 1e14


@dataclass
class KalmanState:
    """Current belief plus the time index it refers to."""

    belief: GaussianBelief
    step: int = 0

    @property
    def mean(self) -> np.ndarray:
        return self.belief.mean

    @property
    def covariance(self) -> np.ndarray:
        return self.belief.covariance


def kf_predict(state: KalmanState, sys: DiscreteLinearSystem, u: np.ndarray | None = None) -> KalmanState:
    """Propagate mean and covariance one step: x <- Fx + Bu, P <- FPF^T + Q."""
    x = state.mean
    if x.shape[0] != sys.n:
        raise ValueError(f"state dimension {x.shape[0]} does not match system dimension {sys.n}")
    mean = sys.F @ x
    if u is not None:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.shape[0] != sys.l:
            raise ValueError(f"input dimension {u.shape[0]} does not match B columns {sys.l}")
        mean = mean + sys.B @ u
    P = symmetrize(sys.F @ state.covariance @ sys.F.T + sys.Q)
    return KalmanState(GaussianBelief(mean, P, state.belief.labels), state.step)


def _gain_update(
    mean: np.ndarray,
    P: np.ndarray,
    C: np.ndarray,
    R: np.ndarray,
    innovation: np.ndarray,
    joseph: bool,
) -> GaussianBelief:
    S = C @ P @ C.T + R
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise EstimationError(f"singular innovation covariance (condition number {cond:.3e})")
    # K = P C^T S^-1, via solve on the symmetric S
    K = np.linalg.solve(S, C @ P).T
    new_mean = mean + K @ innovation
    I_KC = np.eye(P.shape[0]) - K @ C
    if joseph:
        new_P = I_KC @ P @ I_KC.T + K @ R @ K.T
    else:
        new_P = I_KC @ P
    return GaussianBelief(new_mean, symmetrize(new_P))


def kf_update(
    state: KalmanState,
    C: np.ndarray,
    R: np.ndarray,
    y: np.ndarray,
    joseph: bool = False,
) -> KalmanState:
    """Measurement update with gain K = P C^T (C P C^T + R)^-1.

    The covariance update is P <- (I - KC)P with symmetrization; pass
    joseph=True for the quadratic-form variant when conditioning matters.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    innovation = y - C @ state.mean
    belief = _gain_update(state.mean, state.covariance, C, R, innovation, joseph)
    belief.labels = state.belief.labels
    return KalmanState(belief, state.step + 1)


def ekf_update(
    state: KalmanState,
    model: NonlinearMeasurementModel,
    y: np.ndarray,
    joseph: bool = False,
) -> KalmanState:
    """Kalman update with C relinearized at the predicted mean and a nonlinear residual."""
    x = state.mean
    C = np.atleast_2d(np.asarray(model.jacobian(x), dtype=float))
    if not np.all(np.isfinite(C)):
        raise EstimationError("measurement Jacobian is singular or undefined at the current mean")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    innovation = y - np.atleast_1d(np.asarray(model.h(x), dtype=float))
    belief = _gain_update(x, state.covariance, C, model.R, innovation, joseph)
    belief.labels = state.belief.labels
    return KalmanState(belief, state.step + 1)


def run_kalman(
    init: GaussianBelief,
    sys: DiscreteLinearSystem,
    inputs,
    measurements,
    measurement_model: NonlinearMeasurementModel | None = None,
    tag: str = "kf",
) -> EstimateSeries:
    """Alternate predict/update over equal-length input and measurement streams.

    One estimate is emitted per measurement (the posterior at that step). With
    a measurement model supplied, the update step relinearizes (EKF); otherwise
    the system's C and R are used.
    """
    inputs = list(inputs)
    measurements = list(measurements)
    if len(inputs) != len(measurements):
        raise ValueError(f"got {len(inputs)} inputs but {len(measurements)} measurements")
    state = KalmanState(init.copy(), step=0)
    series = EstimateSeries(tag=tag)
    for u, y in zip(inputs, measurements):
        state = kf_predict(state, sys, u)
        if measurement_model is not None:
            state = ekf_update(state, measurement_model, y)
        else:
            state = kf_update(state, sys.C, sys.R, y)
        series.append(state.step, state.step * sys.T, state.mean, np.diag(state.covariance))
    return series
