"""Generic empirical-likelihood engine.

Maximizes sum_j log(p_j) over probability vectors subject to
sum_j p_j g_j = 0 by solving the Lagrange dual equations
sum_j g_j / (1 + lam . g_j) = 0.

Log-likelihood convention used across the library: profile values and
ratios are reported *up to the additive constant* -m*log(m), i.e. as
-sum_j log(1 + lam . g_j).  The constant cancels in every ratio; the full
value sum_j log(p_hat_j) is exposed as ELSolution.log_el.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .errors import DataValidationError

DUAL_TOL = 1e-9
DUAL_MAX_ITER = 100

CONVERGED = "converged"
HULL_VIOLATION = "hull_violation"
MAX_ITER = "max_iter"

_STATUS_NAMES = {
    kernels.STATUS_OK: CONVERGED,
    kernels.STATUS_HULL: HULL_VIOLATION,
    kernels.STATUS_MAXITER: MAX_ITER,
}


@dataclass(frozen=True)
class ELSolution:
    """Result of one dual solve.

    weights are p_hat_j = 1 / (m * (1 + lam . g_j)); log_el is
    sum_j log(p_hat_j) (including the -m*log(m) constant); loglik is the
    up-to-constant value -sum_j log(1 + lam . g_j).
    Fields other than status are meaningful only when converged.
    """

    lam: np.ndarray
    weights: np.ndarray
    log_el: float
    loglik: float
    status: str
    n_iter: int

    @property
    def converged(self):
        return self.status == CONVERGED


def _check_g(g):
    g = np.ascontiguousarray(np.atleast_2d(np.asarray(g, dtype=float)))
    if g.ndim != 2:
        raise DataValidationError("constraint matrix must be two-dimensional")
    m, r = g.shape
    if m <= r:
        raise DataValidationError(
            f"need more units than constraints, got m={m}, r={r}")
    if not np.all(np.isfinite(g)):
        raise DataValidationError("constraint matrix contains non-finite values")
    return g


def solve_dual(g, tol=DUAL_TOL, max_iter=DUAL_MAX_ITER) -> ELSolution:
    """Solve the dual equations for one constraint matrix (rows = units)."""
    g = _check_g(g)
    m = g.shape[0]
    lam, loglik, status, n_iter = kernels.dual_solve(g, tol, max_iter)
    if status == kernels.STATUS_OK:
        weights = 1.0 / (m * (1.0 + g @ lam))
        log_el = float(np.log(weights).sum())
    else:
        weights = np.full(m, np.nan)
        log_el = -np.inf
        loglik = -np.inf
    return ELSolution(lam=lam, weights=weights, log_el=log_el,
                      loglik=float(loglik), status=_STATUS_NAMES[status],
                      n_iter=n_iter)


def log_el_at(g, lam) -> float:
    """Up-to-constant log-EL -sum_j log(1 + lam . g_j) at an arbitrary lam.

    Raises if any 1 + lam . g_j <= 0 (outside the likelihood domain).
    """
    g = _check_g(g)
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.shape[0] != g.shape[1]:
        raise DataValidationError(
            f"lambda has length {lam.shape[0]}, expected {g.shape[1]}")
    value = kernels.dual_value_at(g, lam)
    if not np.isfinite(value):
        raise DataValidationError("1 + lam . g_j <= 0 for some unit")
    return float(value)


def check_hull(g) -> bool:
    """True iff zero lies strictly inside the convex hull of the rows of g.

    Solves the LP  max s  s.t.  sum_j w_j g_j = 0, sum_j w_j = 1, w_j >= s;
    strict interiority is equivalent to a positive optimum.
    """
    g = _check_g(g)
    m, r = g.shape
    # variables: (w_1..w_m, s)
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_eq = np.zeros((r + 1, m + 1))
    a_eq[:r, :m] = g.T
    a_eq[r, :m] = 1.0
    b_eq = np.zeros(r + 1)
    b_eq[r] = 1.0
    a_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    b_ub = np.zeros(m)
    bounds = [(0.0, 1.0)] * m + [(None, 1.0)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    return bool(res.status == 0 and -res.fun > 1e-12)
