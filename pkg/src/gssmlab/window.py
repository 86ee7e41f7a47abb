"""Sliding-window weighted least squares over prior/between/measurement factors.

A window owns an ordered set of variable blocks and a factor list. Assembly
stacks factor rows into (A_w, P_w, b_w); the normal equations are solved
through a stable orthogonal factorization; Gauss-Newton relinearizes any
nonlinear measurement factors; marginalization turns departing states into
priors via the Schur complement on the information matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .models import EstimationError, GaussianBelief, symmetrize

PRIOR = "prior"
BETWEEN = "between"
MEASUREMENT_LINEAR = "measurement-linear"
MEASUREMENT_RELIN = "measurement-relinearizable"

DIAGONAL_PRIORS = "diagonal"
EXACT_JOINT = "exact-joint"

# Acceptance slack for the monotone-objective safeguard: equality up to
# float noise counts as non-increasing.
_OBJECTIVE_SLACK = 1e-12


class UnanchoredVariableError(EstimationError):
    """A connected component of the factor graph has no prior: rank-deficient system."""


class RankDeficiencyError(EstimationError):
    """The stacked system lost column rank."""

    def __init__(self, message: str, smallest_singular_value: float):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


class DivergenceError(EstimationError):
    """The objective increased even after exhausting the step-halving budget."""


@dataclass(frozen=True)
class VariableBlock:
    """A named estimation variable; persistent blocks survive window slides."""

    name: str
    dim: int
    persistent: bool = False


class Factor:
    """One probabilistic constraint over an ordered subset of variables.

    Linear kinds store fixed coefficient blocks (one per referenced variable)
    with a right-hand side; the relinearizable kind carries residual and
    Jacobian callables evaluated at the window's current linearization point.
    The noise covariance must be positive definite: it weights the factor's
    rows in the stacked least-squares problem.
    """

    __slots__ = (
        "kind", "variables", "coeffs", "rhs", "noise",
        "residual_fn", "jacobian_fn",
        "_Linv", "_sigma", "_white_cache",
    )

    def __init__(
        self,
        kind: str,
        variables: Sequence[str],
        noise: np.ndarray,
        coeffs: Sequence[np.ndarray] | None = None,
        rhs: np.ndarray | None = None,
        residual_fn: Callable | None = None,
        jacobian_fn: Callable | None = None,
    ):
        self.kind = kind
        self.variables = tuple(variables)
        noise = np.atleast_2d(np.asarray(noise, dtype=float))
        if noise.shape[0] != noise.shape[1]:
            raise ValueError(f"factor noise must be square, got {noise.shape}")
        if noise.shape[0] == 1:
            if noise[0, 0] <= 0.0:
                raise ValueError("factor noise must be positive definite")
            self._sigma = math.sqrt(noise[0, 0])
            self._Linv = None
        else:
            scale = float(np.abs(noise).max())
            if float(np.abs(noise - noise.T).max()) > 1e-9 * max(1.0, scale):
                raise ValueError("factor noise must be symmetric")
            try:
                L = np.linalg.cholesky(symmetrize(noise))
            except np.linalg.LinAlgError:
                raise ValueError("factor noise must be positive definite") from None
            self._sigma = None
            self._Linv = np.linalg.inv(L)
        self.noise = noise
        self._white_cache = None
        if kind == MEASUREMENT_RELIN:
            if residual_fn is None or jacobian_fn is None:
                raise ValueError("relinearizable factors need residual and jacobian callables")
            self.coeffs = None
            self.rhs = None
            self.residual_fn = residual_fn
            self.jacobian_fn = jacobian_fn
        else:
            if coeffs is None or rhs is None:
                raise ValueError("linear factors need coefficient blocks and a right-hand side")
            self.coeffs = tuple(np.atleast_2d(np.asarray(c, dtype=float)) for c in coeffs)
            if len(self.coeffs) != len(self.variables):
                raise ValueError("one coefficient block per referenced variable required")
            self.rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
            rows = self.rhs.shape[0]
            for name, c in zip(self.variables, self.coeffs):
                if c.shape[0] != rows:
                    raise ValueError(f"coefficient block for {name} has {c.shape[0]} rows, expected {rows}")
            if noise.shape[0] != rows:
                raise ValueError(f"noise is {noise.shape[0]}x{noise.shape[0]} but factor has {rows} rows")
            self.residual_fn = None
            self.jacobian_fn = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def prior(cls, var: str, mean, covariance) -> "Factor":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        return cls(PRIOR, (var,), covariance, coeffs=(np.eye(mean.shape[0]),), rhs=mean)

    @classmethod
    def joint_prior(cls, variables: Sequence[str], dims: Sequence[int], mean, covariance) -> "Factor":
        """Prior over several stacked blocks with a dense joint covariance."""
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        d = mean.shape[0]
        if sum(dims) != d:
            raise ValueError("block dims do not add up to the joint mean length")
        eye = np.eye(d)
        blocks, at = [], 0
        for dim in dims:
            blocks.append(eye[:, at:at + dim])
            at += dim
        return cls(PRIOR, variables, covariance, coeffs=tuple(blocks), rhs=mean)

    @classmethod
    def between(cls, variables: Sequence[str], coeffs: Sequence[np.ndarray], rhs, noise) -> "Factor":
        return cls(BETWEEN, variables, noise, coeffs=coeffs, rhs=rhs)

    @classmethod
    def measurement(cls, variables: Sequence[str], coeffs: Sequence[np.ndarray], y, noise) -> "Factor":
        return cls(MEASUREMENT_LINEAR, variables, noise, coeffs=coeffs, rhs=y)

    @classmethod
    def relinearizable_measurement(cls, variables, residual_fn, jacobian_fn, noise) -> "Factor":
        """residual_fn(*values) = y - h(values); jacobian_fn(*values) = blocks of dh/dx."""
        return cls(MEASUREMENT_RELIN, variables, noise,
                   residual_fn=residual_fn, jacobian_fn=jacobian_fn)

    # -- row generation ----------------------------------------------------

    @property
    def rows(self) -> int:
        return self.noise.shape[0]

    @property
    def relinearizable(self) -> bool:
        return self.kind == MEASUREMENT_RELIN

    def linearized_rows(self, values: dict[str, np.ndarray]) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
        """Coefficient blocks and rhs of this factor's rows at the given point.

        For relinearizable factors the rhs carries the Jacobian correction
        J*x0 + (y - h(x0)), so the linearized rows agree with the nonlinear
        residual to first order around x0. jacobian_fn must return one 2-D
        block per variable and residual_fn a 1-D vector.
        """
        if not self.relinearizable:
            return self.coeffs, self.rhs
        xs = [values[v] for v in self.variables]
        blocks = self.jacobian_fn(*xs)
        rhs = np.asarray(self.residual_fn(*xs), dtype=float)
        for b, x in zip(blocks, xs):
            rhs = rhs + b @ x
        return blocks, rhs

    def whitened_rows(self, values: dict[str, np.ndarray]) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
        """Rows scaled by the inverse noise square root (cached for linear kinds)."""
        if not self.relinearizable:
            if self._white_cache is None:
                self._white_cache = self._whiten(self.coeffs, self.rhs)
            return self._white_cache
        xs = [values[v] for v in self.variables]
        blocks = self.jacobian_fn(*xs)
        rhs = np.asarray(self.residual_fn(*xs), dtype=float)
        for b, x in zip(blocks, xs):
            rhs = rhs + b @ x
        if self._sigma is not None:
            inv = 1.0 / self._sigma
            return tuple(b * inv for b in blocks), rhs * inv
        return tuple(self._Linv @ b for b in blocks), self._Linv @ rhs

    def _whiten(self, blocks, rhs):
        if self._sigma is not None:
            inv = 1.0 / self._sigma
            return tuple(b * inv for b in blocks), rhs * inv
        wb = tuple(self._Linv @ b for b in blocks)
        return wb, self._Linv @ rhs

    def residual(self, values: dict[str, np.ndarray]) -> np.ndarray:
        if self.relinearizable:
            xs = [values[v] for v in self.variables]
            return np.atleast_1d(np.asarray(self.residual_fn(*xs), dtype=float))
        res = self.rhs.copy()
        for name, c in zip(self.variables, self.coeffs):
            res -= c @ values[name]
        return res

    def weighted_sq(self, res: np.ndarray) -> float:
        """res^T P^-1 res via the cached inverse noise square root."""
        if self._sigma is not None:
            v = res[0] / self._sigma
            return v * v
        w = self._Linv @ res
        return float(w @ w)


@dataclass
class SolveResult:
    """Solution of one window problem.

    information is A_w^T P_w^-1 A_w at the linearization point of the final
    solve; objective is the weighted sum of squared (nonlinear where
    applicable) residuals at the estimate; objective_trace logs the accepted
    objective after each Gauss-Newton iteration, starting at the initial point.
    """

    estimate: np.ndarray
    information: np.ndarray
    objective: float
    iterations: int
    converged: bool = True
    objective_trace: list[float] = field(default_factory=list)
    layout: dict[str, slice] | None = None

    def block(self, name: str) -> np.ndarray:
        if self.layout is None:
            raise KeyError("solve result carries no block layout")
        return self.estimate[self.layout[name]]


class _WindowStructure:
    """Assembly plan cached per window structure version.

    Linear factors contribute value-independent whitened rows, so they are
    stacked once; only relinearizable rows are rewritten per iteration.
    """

    __slots__ = ("layout", "total_dim", "names", "A_base", "b_base", "relin", "A_lin", "b_lin")

    def __init__(self, window: "FactorWindow"):
        self.layout = window.layout()
        self.total_dim = window.total_dim
        self.names = [v.name for v in window.variables]
        rows = window.row_count()
        self.A_base = np.zeros((rows, self.total_dim))
        self.b_base = np.zeros(rows)
        self.relin: list[tuple[Factor, slice]] = []
        lin_mask = np.ones(rows, dtype=bool)
        at = 0
        for f in window.factors:
            sl = slice(at, at + f.rows)
            if f.relinearizable:
                self.relin.append((f, sl))
                lin_mask[sl] = False
            else:
                blocks, rhs = f.whitened_rows(window.values)
                for name, blk in zip(f.variables, blocks):
                    self.A_base[sl, self.layout[name]] = blk
                self.b_base[sl] = rhs
            at += f.rows
        self.A_lin = self.A_base[lin_mask]
        self.b_lin = self.b_base[lin_mask]


class FactorWindow:
    """Ordered variable blocks, a factor list, and the current linearization point.

    Window length w bounds the number of non-persistent state blocks to w+1;
    with w=None the window grows without marginalizing (batch mode). A window
    is confined to one thread for its lifetime.
    """

    def __init__(self, w: int | None = None):
        self.w = w
        self.variables: list[VariableBlock] = []
        self.factors: list[Factor] = []
        self.values: dict[str, np.ndarray] = {}
        self._by_name: dict[str, VariableBlock] = {}
        self._version = 0
        self._structure: _WindowStructure | None = None
        self._structure_version = -1
        self._anchored_version = -1

    def _bump(self) -> None:
        self._version += 1

    def structure(self) -> _WindowStructure:
        if self._structure_version != self._version:
            self._structure = _WindowStructure(self)
            self._structure_version = self._version
        return self._structure

    # -- variables ---------------------------------------------------------

    def add_variable(self, block: VariableBlock, value) -> None:
        if block.name in self._by_name:
            raise ValueError(f"variable {block.name} already present")
        value = np.atleast_1d(np.asarray(value, dtype=float))
        if value.shape[0] != block.dim:
            raise ValueError(f"initial value for {block.name} has dim {value.shape[0]}, expected {block.dim}")
        self.variables.append(block)
        self._by_name[block.name] = block
        self.values[block.name] = value.copy()
        self._bump()

    def has_variable(self, name: str) -> bool:
        return name in self._by_name

    def state_blocks(self) -> list[VariableBlock]:
        return [v for v in self.variables if not v.persistent]

    def oldest_state(self) -> VariableBlock:
        for v in self.variables:
            if not v.persistent:
                return v
        raise ValueError("window has no non-persistent state block")

    def layout(self) -> dict[str, slice]:
        out, at = {}, 0
        for v in self.variables:
            out[v.name] = slice(at, at + v.dim)
            at += v.dim
        return out

    @property
    def total_dim(self) -> int:
        return sum(v.dim for v in self.variables)

    def stacked_values(self) -> np.ndarray:
        return np.concatenate([self.values[v.name] for v in self.variables])

    def set_values_from_vector(self, vec: np.ndarray) -> None:
        at = 0
        for v in self.variables:
            self.values[v.name] = vec[at:at + v.dim].copy()
            at += v.dim

    # -- factors -----------------------------------------------------------

    def add_factor(self, factor: Factor) -> None:
        for name in factor.variables:
            if name not in self._by_name:
                raise ValueError(f"factor references unknown variable {name}")
        if not factor.relinearizable:
            for name, c in zip(factor.variables, factor.coeffs):
                if c.shape[1] != self._by_name[name].dim:
                    raise ValueError(
                        f"coefficient block for {name} is {c.shape[1]} wide, "
                        f"variable has dim {self._by_name[name].dim}"
                    )
        self.factors.append(factor)
        self._bump()

    @property
    def has_relinearizable(self) -> bool:
        return any(f.relinearizable for f in self.factors)

    def row_count(self) -> int:
        return sum(f.rows for f in self.factors)

    def objective(self, values: dict[str, np.ndarray] | None = None) -> float:
        """Weighted sum of squared residuals at the given (default current) point."""
        if values is None:
            values = self.values
        return sum(f.weighted_sq(f.residual(values)) for f in self.factors)

    def _objective_from_vector(self, x: np.ndarray) -> float:
        """objective() on a stacked vector, using the cached whitened linear rows."""
        s = self.structure()
        r = s.b_lin - s.A_lin @ x
        total = float(r @ r)
        for f, _ in s.relin:
            xs = [x[s.layout[name]] for name in f.variables]
            total += f.weighted_sq(np.asarray(f.residual_fn(*xs), dtype=float))
        return total

    # -- anchoring ---------------------------------------------------------

    def check_anchored(self) -> None:
        """Every connected component must contain a prior, else the system is singular."""
        if self._anchored_version == self._version:
            return
        parent = {v.name: v.name for v in self.variables}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for f in self.factors:
            root = find(f.variables[0])
            for name in f.variables[1:]:
                parent[find(name)] = root
        anchored = set()
        for f in self.factors:
            if f.kind == PRIOR:
                anchored.add(find(f.variables[0]))
        loose = sorted(v.name for v in self.variables if find(v.name) not in anchored)
        if loose:
            raise UnanchoredVariableError(
                f"variables {loose} have no prior in their component: the stacked system is rank deficient"
            )
        self._anchored_version = self._version


# -- assembly and solving ----------------------------------------------------


def assemble(window: FactorWindow) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack factor rows into (A_w, P_w, b_w) at the current linearization point.

    Rows follow factor order; P_w is the block diagonal of factor noises.
    Relinearizable factors contribute Jacobian rows and residual-corrected rhs.
    """
    window.check_anchored()
    layout = window.layout()
    rows = window.row_count()
    cols = window.total_dim
    A = np.zeros((rows, cols))
    P = np.zeros((rows, rows))
    b = np.zeros(rows)
    at = 0
    for f in window.factors:
        blocks, rhs = f.linearized_rows(window.values)
        r = f.rows
        for name, blk in zip(f.variables, blocks):
            A[at:at + r, layout[name]] = blk
        P[at:at + r, at:at + r] = f.noise
        b[at:at + r] = rhs
        at += r
    return A, P, b


def _assemble_whitened(window: FactorWindow) -> tuple[np.ndarray, np.ndarray]:
    """Like assemble, but with rows pre-scaled by the inverse noise square roots.

    The value-independent (linear) rows come from the cached structure; only
    relinearizable rows are recomputed at the current linearization point.
    """
    window.check_anchored()
    s = window.structure()
    A = s.A_base.copy()
    b = s.b_base.copy()
    for f, sl in s.relin:
        blocks, rhs = f.whitened_rows(window.values)
        for name, blk in zip(f.variables, blocks):
            A[sl, s.layout[name]] = blk
        b[sl] = rhs
    return A, b


def _solve_whitened(Aw: np.ndarray, bw: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Least squares on the whitened system via QR, with an SVD fallback.

    The SVD path runs only when the triangular factor looks rank deficient,
    and produces the diagnostic (rank, smallest singular value) for the error.
    """
    if Aw.shape[0] >= Aw.shape[1]:
        q, r = np.linalg.qr(Aw)
        diag = np.abs(np.diag(r))
    else:
        diag = np.zeros(1)  # underdetermined: force the diagnostic path
    if diag.size and diag.min() > 1e-10 * max(1.0, diag.max()):
        x = np.linalg.solve(r, q.T @ bw)
    else:
        x, _, rank, sv = np.linalg.lstsq(Aw, bw, rcond=None)
        if rank < Aw.shape[1]:
            raise RankDeficiencyError(
                f"window system is rank deficient: rank {rank} of {Aw.shape[1]} columns "
                f"(smallest singular value {sv[-1]:.3e})",
                smallest_singular_value=float(sv[-1]),
            )
    resid = Aw @ x - bw
    return x, symmetrize(Aw.T @ Aw), float(resid @ resid)


def solve_normal_equations(A: np.ndarray, P: np.ndarray, b: np.ndarray) -> SolveResult:
    """Minimize ||A X - b||^2 weighted by P^-1.

    Solved by whitening with the Cholesky factor of P and an orthogonal
    least-squares factorization; numerically equivalent to the explicit
    pseudo-inverse formula but stable.
    """
    A = np.asarray(A, dtype=float)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    try:
        L = np.linalg.cholesky(symmetrize(P))
    except np.linalg.LinAlgError:
        raise ValueError("P_w must be positive definite") from None
    Aw = solve_triangular(L, A, lower=True)
    bw = solve_triangular(L, b, lower=True)
    x, info, obj = _solve_whitened(Aw, bw)
    return SolveResult(estimate=x, information=info, objective=obj,
                       iterations=1, objective_trace=[obj])


def gauss_newton(
    window: FactorWindow,
    tol: float = 1e-6,
    max_iter: int = 20,
    max_halvings: int = 8,
) -> SolveResult:
    """Iterate assemble/solve/relinearize until the update norm drops below tol.

    Steps are halved until the (nonlinear) objective does not increase, so the
    accepted objective sequence is non-increasing. All-linear windows are a
    single exact solve. The window's linearization point is advanced to the
    returned estimate.
    """
    layout = window.layout()
    if not window.has_relinearizable:
        Aw, bw = _assemble_whitened(window)
        x, info, obj = _solve_whitened(Aw, bw)
        window.set_values_from_vector(x)
        return SolveResult(estimate=x, information=info, objective=obj,
                           iterations=1, objective_trace=[obj], layout=layout)

    x0 = window.stacked_values()
    f = window._objective_from_vector(x0)
    trace = [f]
    info = None
    converged = False
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        Aw, bw = _assemble_whitened(window)
        xhat, info, _ = _solve_whitened(Aw, bw)
        dx = xhat - x0
        step_norm = float(np.linalg.norm(dx))
        if step_norm < tol:
            # Fixed point reached: the proposed update is below tolerance, so
            # stay put rather than risk a float-noise objective comparison.
            converged = True
            break

        alpha = 1.0
        accepted = False
        for _ in range(max_halvings + 1):
            trial = x0 + alpha * dx
            ft = window._objective_from_vector(trial)
            if ft <= f * (1.0 + _OBJECTIVE_SLACK) + _OBJECTIVE_SLACK:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            raise DivergenceError(
                f"objective increased after {max_halvings} halvings "
                f"(f={f:.6e}, best trial {ft:.6e})"
            )
        x0 = trial
        window.set_values_from_vector(x0)
        f = ft
        trace.append(f)
        if alpha * step_norm < tol:
            converged = True
            break

    return SolveResult(
        estimate=x0,
        information=info,
        objective=f,
        iterations=iterations,
        converged=converged,
        objective_trace=trace,
        layout=layout,
    )


# -- marginalization ----------------------------------------------------------


def marginalize(
    info: np.ndarray,
    mean: np.ndarray,
    blocks: Sequence[tuple[str, int]],
    keep: Sequence[str],
    drop: Sequence[str],
) -> GaussianBelief:
    """Schur-complement the dropped blocks out of an information-form Gaussian.

    blocks gives the (name, dim) layout of info/mean. The result is the exact
    marginal over the kept blocks, returned in moment form so it can seed a
    prior factor.
    """
    keep = list(keep)
    drop = set(drop)
    names = [n for n, _ in blocks]
    if set(keep) | drop != set(names) or set(keep) & drop:
        raise ValueError("keep and drop must partition the block set")
    idx, at = {}, 0
    for n, d in blocks:
        idx[n] = np.arange(at, at + d)
        at += d
    keep_order = [n for n in names if n in keep]
    ki = np.concatenate([idx[n] for n in keep_order])
    di = np.concatenate([idx[n] for n in sorted(drop, key=names.index)])
    info = np.asarray(info, dtype=float)
    H_kk = info[np.ix_(ki, ki)]
    H_kd = info[np.ix_(ki, di)]
    H_dd = info[np.ix_(di, di)]
    try:
        cross = np.linalg.solve(H_dd, H_kd.T)
    except np.linalg.LinAlgError:
        raise EstimationError("cannot marginalize: dropped block of the information matrix is singular") from None
    H_marg = symmetrize(H_kk - H_kd @ cross)
    try:
        cov = np.linalg.inv(H_marg)
    except np.linalg.LinAlgError:
        raise EstimationError("marginal information is singular: no proper density over the kept blocks") from None
    mean = np.asarray(mean, dtype=float)
    return GaussianBelief(mean[ki], symmetrize(cov), labels=tuple(keep_order))


def _subgraph_moments(
    factors: Sequence[Factor],
    values: dict[str, np.ndarray],
    blocks: Sequence[tuple[str, int]],
) -> tuple[np.ndarray, np.ndarray]:
    """Information matrix and mean of the Gaussian formed by these factors alone.

    The mean comes from a least-squares solve on the stacked whitened rows
    rather than the normal equations, which matters when factor weights span
    many orders of magnitude.
    """
    offs, at = {}, 0
    for n, d in blocks:
        offs[n] = slice(at, at + d)
        at += d
    rows = sum(f.rows for f in factors)
    A = np.zeros((rows, at))
    b = np.zeros(rows)
    r = 0
    for f in factors:
        wblocks, wrhs = f.whitened_rows(values)
        for name, blk in zip(f.variables, wblocks):
            A[r:r + f.rows, offs[name]] = blk
        b[r:r + f.rows] = wrhs
        r += f.rows
    try:
        mu, info, _ = _solve_whitened(A, b)
    except RankDeficiencyError:
        raise EstimationError("absorbed factor subgraph is singular; cannot form a marginal prior") from None
    return info, mu


def _marginalize_oldest(window: FactorWindow, mode: str) -> None:
    """Retire the oldest non-persistent state into prior factors.

    All factors fully supported on the departing state and its neighbors are
    absorbed (so the surviving rows keep the prior/between/measurement layout),
    the state is marginalized from their joint information, and the result is
    re-entered per mode: one independent prior per neighbor block
    (diagonal) or a single dense joint prior (exact-joint).
    """
    if mode not in (DIAGONAL_PRIORS, EXACT_JOINT):
        raise ValueError(f"unknown marginal-prior mode {mode!r}")
    drop = window.oldest_state()
    adjacent = [f for f in window.factors if drop.name in f.variables]
    closure_names = {drop.name}
    for f in adjacent:
        closure_names.update(f.variables)
    absorbed = [f for f in window.factors if set(f.variables) <= closure_names]
    closure_blocks = [(v.name, v.dim) for v in window.variables if v.name in closure_names]

    H, mu = _subgraph_moments(absorbed, window.values, closure_blocks)
    keep = [n for n, _ in closure_blocks if n != drop.name]
    belief = marginalize(H, mu, closure_blocks, keep=keep, drop=[drop.name])

    window.factors = [f for f in window.factors if f not in absorbed]
    window.variables = [v for v in window.variables if v.name != drop.name]
    del window._by_name[drop.name]
    del window.values[drop.name]
    window._bump()

    dims = [window._by_name[n].dim for n in belief.labels]
    new_priors: list[Factor] = []
    if mode == EXACT_JOINT and len(belief.labels) > 1:
        new_priors.append(Factor.joint_prior(belief.labels, dims, belief.mean, belief.covariance))
    else:
        at = 0
        for name, d in zip(belief.labels, dims):
            sl = slice(at, at + d)
            new_priors.append(Factor.prior(name, belief.mean[sl], belief.covariance[sl, sl]))
            at += d
    window.factors = new_priors + window.factors
    window._bump()


def slide(
    window: FactorWindow,
    new_between: Factor,
    new_measurement: Factor | None,
    mode: str = DIAGONAL_PRIORS,
) -> FactorWindow:
    """Append the next step's factors, marginalizing the oldest state when full.

    A variable referenced by the between factor but unknown to the window is
    created on the fly (dimension from the coefficient block, initial value
    propagated through the between relation). Below capacity the window grows
    without marginalizing.
    """
    unknown = [n for n in new_between.variables if not window.has_variable(n)]
    if len(unknown) > 1:
        raise ValueError(f"between factor introduces more than one new variable: {unknown}")
    if unknown:
        name = unknown[0]
        pos = new_between.variables.index(name)
        coeff = new_between.coeffs[pos]
        rest = new_between.rhs.copy()
        for other, c in zip(new_between.variables, new_between.coeffs):
            if other != name:
                rest -= c @ window.values[other]
        value = np.linalg.solve(coeff, rest)
        window.add_variable(VariableBlock(name, coeff.shape[1]), value)
    window.add_factor(new_between)
    if new_measurement is not None:
        window.add_factor(new_measurement)
    if window.w is not None:
        while len(window.state_blocks()) > window.w + 1:
            _marginalize_oldest(window, mode)
    return window


# -- batch construction -------------------------------------------------------


def build_linear_chain_window(
    init: GaussianBelief,
    F: np.ndarray,
    B: np.ndarray,
    C: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    inputs,
    measurements,
    w: int | None = None,
) -> FactorWindow:
    """Window for a time-invariant linear chain: prior, then per-step between/measurement.

    With w=None this is the full batch MAP system; handy as a dense cross-check
    for the recursive estimators.
    """
    inputs = list(inputs)
    measurements = list(measurements)
    if len(inputs) != len(measurements):
        raise ValueError("inputs and measurements must pair up one per step")
    window = FactorWindow(w=w)
    n = init.dim
    window.add_variable(VariableBlock("x0", n), init.mean)
    window.add_factor(Factor.prior("x0", init.mean, init.covariance))
    eye = np.eye(n)
    for k, (u, y) in enumerate(zip(inputs, measurements)):
        rhs = B @ np.atleast_1d(np.asarray(u, dtype=float)) if u is not None else np.zeros(n)
        prev, nxt = f"x{k}", f"x{k + 1}"
        window.add_variable(VariableBlock(nxt, n), F @ window.values[prev] + rhs)
        window.add_factor(Factor.between((prev, nxt), (-F, eye), rhs, Q))
        window.add_factor(Factor.measurement((nxt,), (C,), y, R))
    return window
