"""System models and first-order discretization.

Holds the continuous/discrete linear system containers shared by every
estimator, the partitioned variant whose constant sub-state has no dynamics
of its own, and Gaussian beliefs used as priors and posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class EstimationError(Exception):
    """Numerical failure inside an estimator (singular system, divergence)."""


def symmetrize(P: np.ndarray) -> np.ndarray:
    """Return (P + P^T)/2; applied after every covariance-producing step."""
    return 0.5 * (P + P.T)


def _as_matrix(M, rows: int | None = None, cols: int | None = None, name: str = "matrix") -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if rows is not None and M.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got {M.shape[0]}")
    if cols is not None and M.shape[1] != cols:
        raise ValueError(f"{name} must have {cols} columns, got {M.shape[1]}")
    return M


def require_psd(M: np.ndarray, name: str = "matrix", tol: float = 1e-8) -> np.ndarray:
    """Validate symmetry and positive semidefiniteness (within tolerance)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got {M.shape}")
    if not np.allclose(M, M.T, atol=tol * max(1.0, float(np.abs(M).max(initial=0.0)))):
        raise ValueError(f"{name} must be symmetric")
    eigs = np.linalg.eigvalsh(symmetrize(M))
    floor = -tol * max(1.0, float(eigs.max(initial=0.0)))
    if eigs.min(initial=0.0) < floor:
        raise ValueError(f"{name} must be positive semidefinite (min eigenvalue {eigs.min():.3e})")
    return M


def require_pd(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate symmetry and strict positive definiteness (Cholesky test)."""
    M = require_psd(M, name)
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive definite") from None
    return M


@dataclass
class ContinuousLinearSystem:
    """Continuous-time model xdot = A x + B u + q, y = C x + r.

    Q is the process-noise covariance (continuous-time convention), R the
    measurement-noise covariance. Discrete covariances are supplied at
    discretization time rather than derived from Q.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.A = _as_matrix(self.A, name="A")
        n = self.A.shape[0]
        if self.A.shape[1] != n:
            raise ValueError("A must be square")
        self.B = _as_matrix(self.B, rows=n, name="B")
        self.C = _as_matrix(self.C, cols=n, name="C")
        m = self.C.shape[0]
        self.Q = require_psd(_as_matrix(self.Q, rows=n, cols=n, name="Q"), "Q")
        self.R = require_pd(_as_matrix(self.R, rows=m, cols=m, name="R"), "R")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def l(self) -> int:
        return self.B.shape[1]


@dataclass
class DiscreteLinearSystem:
    """Discrete-time model x_{k+1} = F x_k + B u_k + q_k, y_{k+1} = C x_{k+1} + r_k."""

    F: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    T: float

    def __post_init__(self):
        self.F = _as_matrix(self.F, name="F")
        n = self.F.shape[0]
        if self.F.shape[1] != n:
            raise ValueError("F must be square")
        self.B = _as_matrix(self.B, rows=n, name="B")
        self.C = _as_matrix(self.C, cols=n, name="C")
        m = self.C.shape[0]
        self.Q = require_psd(_as_matrix(self.Q, rows=n, cols=n, name="Q"), "Q")
        self.R = require_pd(_as_matrix(self.R, rows=m, cols=m, name="R"), "R")
        self.T = float(self.T)

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def l(self) -> int:
        return self.B.shape[1]


@dataclass
class PartitionedContinuousSystem:
    """Continuous model split into a dynamic block x_c and a constant block x_b.

    xdot_c = A_c x_c + A_b x_b + B u + q,   y = C_c x_c + C_b x_b + r

    The constant block has identically zero dynamics and zero process noise,
    so no A rows are stored for it. n = n_c + n_b recovers the unpartitioned
    state dimension.
    """

    A_c: np.ndarray
    A_b: np.ndarray
    B: np.ndarray
    C_c: np.ndarray
    C_b: np.ndarray
    Q_c: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.A_c = _as_matrix(self.A_c, name="A_c")
        n_c = self.A_c.shape[0]
        if self.A_c.shape[1] != n_c:
            raise ValueError("A_c must be square")
        self.A_b = _as_matrix(self.A_b, rows=n_c, name="A_b")
        n_b = self.A_b.shape[1]
        self.B = _as_matrix(self.B, rows=n_c, name="B")
        self.C_c = _as_matrix(self.C_c, cols=n_c, name="C_c")
        m = self.C_c.shape[0]
        self.C_b = _as_matrix(self.C_b, rows=m, cols=n_b, name="C_b")
        self.Q_c = require_psd(_as_matrix(self.Q_c, rows=n_c, cols=n_c, name="Q_c"), "Q_c")
        self.R = require_pd(_as_matrix(self.R, rows=m, cols=m, name="R"), "R")

    @property
    def n_c(self) -> int:
        return self.A_c.shape[0]

    @property
    def n_b(self) -> int:
        return self.A_b.shape[1]

    @property
    def n(self) -> int:
        return self.n_c + self.n_b

    @property
    def m(self) -> int:
        return self.C_c.shape[0]


@dataclass
class PartitionedDiscreteSystem:
    """Discrete partitioned model.

    x_c(k+1) = F_c x_c(k) + F_b x_b + B u_k + q_c(k)
    y_{k+1}  = C_c x_c(k+1) + C_b x_b + r_k

    F_b = A_b * T exactly; the constant block evolves only through the prior
    carried between window slides.
    """

    F_c: np.ndarray
    F_b: np.ndarray
    B: np.ndarray
    C_c: np.ndarray
    C_b: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    T: float

    def __post_init__(self):
        self.F_c = _as_matrix(self.F_c, name="F_c")
        n_c = self.F_c.shape[0]
        if self.F_c.shape[1] != n_c:
            raise ValueError("F_c must be square")
        self.F_b = _as_matrix(self.F_b, rows=n_c, name="F_b")
        n_b = self.F_b.shape[1]
        self.B = _as_matrix(self.B, rows=n_c, name="B")
        self.C_c = _as_matrix(self.C_c, cols=n_c, name="C_c")
        m = self.C_c.shape[0]
        self.C_b = _as_matrix(self.C_b, rows=m, cols=n_b, name="C_b")
        self.Q = require_psd(_as_matrix(self.Q, rows=n_c, cols=n_c, name="Q"), "Q")
        self.R = require_pd(_as_matrix(self.R, rows=m, cols=m, name="R"), "R")
        self.T = float(self.T)

    @property
    def n_c(self) -> int:
        return self.F_c.shape[0]

    @property
    def n_b(self) -> int:
        return self.F_b.shape[1]

    @property
    def m(self) -> int:
        return self.C_c.shape[0]


@dataclass
class GaussianBelief:
    """Mean and covariance over one or more named variable blocks.

    The covariance is symmetrized on construction so downstream consumers can
    rely on exact symmetry.
    """

    mean: np.ndarray
    covariance: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        d = self.mean.shape[0]
        self.covariance = symmetrize(_as_matrix(self.covariance, rows=d, cols=d, name="covariance"))
        self.labels = tuple(self.labels)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def copy(self) -> "GaussianBelief":
        return GaussianBelief(self.mean.copy(), self.covariance.copy(), self.labels)


@dataclass
class NonlinearMeasurementModel:
    """Measurement y = h(x) + r with an analytic Jacobian of h.

    The Jacobian is trusted here; the finite-difference consistency check
    lives in the test suite.
    """

    h: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    R: np.ndarray

    def __post_init__(self):
        self.R = require_pd(np.atleast_2d(np.asarray(self.R, dtype=float)), "R")

    @property
    def m(self) -> int:
        return self.R.shape[0]


def discretize_linear(sys: ContinuousLinearSystem, T: float, Qd: np.ndarray) -> DiscreteLinearSystem:
    """First-order discretization: F = I + A*T, B_k = B*T, C passed through.

    Qd is the discrete process-noise covariance, supplied by the caller
    (experiment settings quote it directly, so it is treated as primary input).
    """
    if T <= 0:
        raise ValueError(f"sample interval T must be positive, got {T}")
    n = sys.n
    F = np.eye(n) + sys.A * T
    return DiscreteLinearSystem(F=F, B=sys.B * T, C=sys.C.copy(), Q=Qd, R=sys.R.copy(), T=T)


def discretize_partitioned(
    sys: PartitionedContinuousSystem, T: float, Qd: np.ndarray
) -> PartitionedDiscreteSystem:
    """Distributed discretization: F_c = I + A_c*T, F_b = A_b*T.

    Only the dynamic block is discretized as a time series; the constant
    block keeps a single representation across all steps.
    """
    if T <= 0:
        raise ValueError(f"sample interval T must be positive, got {T}")
    F_c = np.eye(sys.n_c) + sys.A_c * T
    return PartitionedDiscreteSystem(
        F_c=F_c,
        F_b=sys.A_b * T,
        B=sys.B * T,
        C_c=sys.C_c.copy(),
        C_b=sys.C_b.copy(),
        Q=Qd,
        R=sys.R.copy(),
        T=T,
    )
