"""Simplex-constrained regression solvers.

Each solver minimizes a loss of the residual ``target - design @ pi`` over
the probability simplex ``pi >= 0, sum(pi) = 1``:

* least squares, as the quadratic program ``0.5 pi'D pi + d'pi`` with
  ``D = 2 X'WX`` and ``d = -2 X'Wy``, by accelerated projected gradient;
* least absolute deviation, as a linear program over ``pi`` and split
  residual variables, by a primal simplex method;
* squared Hellinger distance ``0.5 * sum (sqrt(y) - sqrt(X pi))**2``, which
  for block-normalized distributions equals "blocks minus Bhattacharyya
  sum", by projected gradient with backtracking.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .core import ProportionVector, RegressionSystem, SolveResult, make_proportion
from .errors import (
    ConfigError,
    ContractError,
    DegenerateClassifierError,
    InvalidSystemError,
    NumericError,
    RangeError,
    SolverFailure,
)

RANK_RTOL = 1e-10


class Loss(str, enum.Enum):
    LEAST_SQUARES = "least_squares"
    LEAST_ABSOLUTE_DEVIATION = "least_absolute_deviation"
    HELLINGER = "hellinger"


@dataclass(frozen=True)
class SolverConfig:
    loss: Loss = Loss.LEAST_SQUARES
    tolerance: float = 1e-8
    max_iterations: int = 10000
    hellinger_floor: float = 1e-12
    backend: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "loss", Loss(self.loss))
        if not self.tolerance > 0:
            raise ConfigError("solver tolerance must be positive")
        if int(self.max_iterations) < 1:
            raise ConfigError("max_iterations must be at least 1")
        if not self.hellinger_floor >= 0:
            raise ConfigError("hellinger_floor must be nonnegative")
        if self.backend not in (None, "python", "cython"):
            raise ConfigError(f"unknown kernel backend {self.backend!r}")

    def with_loss(self, loss) -> "SolverConfig":
        return SolverConfig(Loss(loss), self.tolerance, self.max_iterations, self.hellinger_floor, self.backend)


def project_to_simplex(v) -> ProportionVector:
    """Euclidean projection of ``v`` onto the simplex."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size < 2:
        raise ContractError("projection needs at least two coordinates")
    if not np.all(np.isfinite(v)):
        raise NumericError("cannot project non-finite vector")
    return make_proportion(_backend.kernels.project_simplex(v))


def objective(system: RegressionSystem, proportions, loss) -> float:
    """Loss value of ``proportions`` under ``loss`` for ``system``."""
    loss = Loss(loss)
    pi = np.asarray(proportions, dtype=float)
    w = system.weights()
    if loss is Loss.LEAST_SQUARES:
        r = system.residual(pi)
        return float(w @ (r * r))
    if loss is Loss.LEAST_ABSOLUTE_DEVIATION:
        return float(w @ np.abs(system.residual(pi)))
    z = np.maximum(system.design @ pi, 0.0)
    return float(0.5 * (w @ (np.sqrt(system.target) - np.sqrt(z)) ** 2))


def _tangent_basis(k: int) -> np.ndarray:
    # orthonormal basis of {v : sum(v) = 0}
    q, _ = np.linalg.qr(np.eye(k) - 1.0 / k)
    return q[:, : k - 1]


def is_non_unique(design: np.ndarray) -> bool:
    """True if the design is numerically singular along the simplex.

    The minimizer over the simplex is unique for least squares exactly when
    ``design`` is injective on the directions ``sum(v) = 0``.
    """
    design = np.asarray(design, dtype=float)
    s_full = np.linalg.svd(design, compute_uv=False)
    if s_full.size == 0 or s_full[0] == 0:
        return True
    s_tan = np.linalg.svd(design @ _tangent_basis(design.shape[1]), compute_uv=False)
    if s_tan.size < design.shape[1] - 1:
        return True
    return bool(s_tan[-1] < RANK_RTOL * s_full[0])


def _power_lipschitz(M: np.ndarray, iters: int = 100) -> float:
    """Largest-eigenvalue estimate of a symmetric PSD matrix by power iteration."""
    k = M.shape[0]
    v = np.cos(np.arange(1, k + 1) * 1.3)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            break
        v = w / nw
        est = float(v @ M @ v)
    return est


def _uniform(k):
    return np.full(k, 1.0 / k)


def _finish(system, x, loss, iterations, converged, history=None, non_unique=False):
    pi = make_proportion(x)
    return SolveResult(
        proportions=pi,
        residual=system.residual(pi),
        loss_value=objective(system, pi, loss),
        iterations=int(iterations),
        converged=bool(converged),
        non_unique=non_unique,
        history=history,
    )


def _check_system(system: RegressionSystem):
    if system.n_classes < 2:
        raise ContractError("the regression needs K >= 2 classes")


def solve_least_squares(system: RegressionSystem, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Weighted least squares on the simplex.

    ``history`` holds the (non-increasing) objective value per iteration.
    """
    _check_system(system)
    X, y, w = system.design, system.target, system.weights()
    k = X.shape[1]
    Xw = X * w[:, None]
    D = 2.0 * (X.T @ Xw)
    d = -2.0 * (Xw.T @ y)
    const = float(y @ (w * y))
    # only curvature along sum(v) = 0 matters: projection ignores shifts along ones
    P = np.eye(k) - 1.0 / k
    lip = _power_lipschitz(P @ D @ P) * 1.01
    lip = max(lip, 1e-12 * float(np.trace(D)), 1e-300)
    kern = _backend.get_kernels(config.backend)
    # solving the curvature-normalized problem makes the iterates, and so the
    # stopping point, invariant to rescaling the system
    x, it, conv, hist = kern.ls_apg(
        D / lip, d / lip, _uniform(k), 1.0, config.tolerance, int(config.max_iterations)
    )
    return _finish(
        system, x, Loss.LEAST_SQUARES, it, conv, np.maximum(hist * lip + const, 0.0), is_non_unique(X)
    )


def _lad_simplex(X, y, w, max_pivots):
    """Primal simplex on  min w'(u+ + u-)  s.t.  X pi + u+ - u- = y,  1'pi = 1.

    Dantzig pricing, switching to Bland's rule after a run of degenerate
    pivots so the method cannot cycle.
    Returns ``(pi, pivots)``.
    """
    m, k = X.shape
    n = k + 2 * m
    # starting basis: pi = e_0, each residual carried by u+ or u- by sign
    r0 = y - X[:, 0]
    sign = np.where(r0 >= 0, 1.0, -1.0)
    T = np.zeros((m + 1, n))
    T[m, :k] = 1.0
    T[:m, :k] = X - X[:, :1]
    T[:m, k : k + m] = np.eye(m)
    T[:m, k + m :] = -np.eye(m)
    T[:m] *= sign[:, None]
    beta = np.empty(m + 1)
    beta[:m] = np.abs(r0)
    beta[m] = 1.0
    basis = np.empty(m + 1, dtype=np.int64)
    basis[:m] = np.where(sign > 0, k + np.arange(m), k + m + np.arange(m))
    basis[m] = 0

    cost = np.concatenate([np.zeros(k), w, w])
    rc = cost - cost[basis] @ T
    scale = max(1.0, float(np.abs(cost).max()))
    opt_tol = 1e-11 * scale
    piv_tol = 1e-12

    pivots = 0
    degenerate_run = 0
    bland = False
    while True:
        candidates = np.flatnonzero(rc < -opt_tol)
        if candidates.size == 0:
            break
        if pivots >= max_pivots:
            raise SolverFailure(
                f"LP pivot limit {max_pivots} reached ({m + 1} rows, {n} columns, "
                f"objective {float(cost[basis] @ beta):.6g}, bland={bland})"
            )
        e = int(candidates[0]) if bland else int(np.argmin(rc))
        col = T[:, e]
        rows = np.flatnonzero(col > piv_tol)
        if rows.size == 0:
            raise SolverFailure("LP unbounded; the LAD objective is bounded below, so this is numerical breakdown")
        ratios = beta[rows] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(tied[np.argmin(basis[tied])])

        piv = T[r, e]
        T[r] /= piv
        beta[r] /= piv
        colv = T[:, e].copy()
        colv[r] = 0.0
        T -= np.outer(colv, T[r])
        beta -= colv * beta[r]
        np.maximum(beta, 0.0, out=beta)
        rc -= rc[e] * T[r]
        basis[r] = e
        pivots += 1

        if best <= 1e-14:
            degenerate_run += 1
            if degenerate_run >= 20:
                bland = True
        else:
            degenerate_run = 0
            bland = False

    sol = np.zeros(n)
    sol[basis] = beta
    return sol[:k], pivots


def solve_least_absolute_deviation(system: RegressionSystem, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Weighted L1 regression on the simplex via its linear-programming form."""
    _check_system(system)
    X, y, w = system.design, system.target, system.weights()
    limit = max(int(config.max_iterations), 10 * (X.shape[0] * 3 + X.shape[1]))
    pi, pivots = _lad_simplex(X, y, w, limit)
    return _finish(system, pi, Loss.LEAST_ABSOLUTE_DEVIATION, pivots, True, non_unique=is_non_unique(X))


def solve_hellinger(system: RegressionSystem, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Squared-Hellinger fit of the target distribution by a design mixture."""
    _check_system(system)
    X, y, w = system.design, system.target, system.weights()
    if np.any(X < 0) or np.any(y < 0):
        raise InvalidSystemError("Hellinger loss needs nonnegative design and target entries")
    # rows with an all-zero design row are constant in pi
    live = np.any(X > 0, axis=1)
    kern = _backend.get_kernels(config.backend)
    x, it, conv, hist = kern.hellinger_pgd(
        np.ascontiguousarray(X[live]),
        y[live],
        w[live],
        _uniform(X.shape[1]),
        float(config.hellinger_floor),
        config.tolerance,
        int(config.max_iterations),
    )
    return _finish(system, x, Loss.HELLINGER, it, conv, hist, is_non_unique(X))


_DISPATCH = {
    Loss.LEAST_SQUARES: solve_least_squares,
    Loss.LEAST_ABSOLUTE_DEVIATION: solve_least_absolute_deviation,
    Loss.HELLINGER: solve_hellinger,
}


def solve(system: RegressionSystem, config: SolverConfig = SolverConfig()) -> SolveResult:
    return _DISPATCH[config.loss](system, config)


def binary_adjusted_count(p_prime: float, tpr: float, fpr: float) -> float:
    """Classical two-class adjustment ``clip((p' - fpr) / (tpr - fpr), 0, 1)``."""
    for name, v in (("p_prime", p_prime), ("tpr", tpr), ("fpr", fpr)):
        if not 0.0 <= v <= 1.0:
            raise RangeError(f"{name}={v} outside [0, 1]")
    if tpr == fpr:
        raise DegenerateClassifierError("tpr equals fpr; the classifier carries no signal")
    return max(min((p_prime - fpr) / (tpr - fpr), 1.0), 0.0)
