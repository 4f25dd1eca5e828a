"""ATE inference via sample empirical likelihood with propensity-score
weighted constraints.

Instead of adding propensity constraints, the inverse fitted scores enter
the model-calibration and parameter constraints as weights.  Point
estimation needs only a scalar dual solve per arm; inference solves the
joint stationarity system over (lam1, lam0, mu1) by damped Newton at each
candidate theta.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from . import kernels
from .data import ObservedSample, split_groups
from .elsolver import DUAL_MAX_ITER, DUAL_TOL, solve_dual
from .errors import HullViolationError, NonConvergenceError
from .influence import (centered_covariance, dominant_eigenvalue,
                        influence_matrix, psd_sqrt)
from .models import OrFit, PsFit
from .ratio_ci import IntervalResult, invert_ratio

PHI_TOL = 1e-9
PHI_MAX_ITER = 100


@dataclass(frozen=True)
class Sel2Point:
    """Point estimates from the weighted-constraint formulation."""

    mu1_hat: float
    mu0_hat: float
    theta_hat: float
    lambda1: float
    lambda0: float
    weights_p1: np.ndarray
    weights_p0: np.ndarray
    loglik_global: float


@dataclass(frozen=True)
class PhiSolution:
    """Stationary point of the joint objective at a fixed theta."""

    lambda1: np.ndarray
    lambda0: np.ndarray
    mu1: float
    loglik: float
    converged: bool
    n_iter: int

    def as_vector(self):
        return np.concatenate([self.lambda1, self.lambda0, [self.mu1]])


@dataclass(frozen=True)
class Sel2Variance:
    omega2: np.ndarray     # 4x4 influence covariance
    e_hat: np.ndarray      # 6x6 joint system matrix
    f_hat: np.ndarray      # 5x5 theta-restricted system matrix
    delta2: float
    v2: np.ndarray
    rank_residual: float
    se_mu1: float
    se_theta: float


class Sel2:
    """Inference context bound to one sample and its fitted nuisances."""

    def __init__(self, sample: ObservedSample, ps: PsFit, or_: OrFit):
        groups = split_groups(sample)
        if groups.n1 < 2 or groups.n0 < 2:
            raise NonConvergenceError("each arm needs at least 2 units")
        self.sample = sample
        self.ps = ps
        self.or_ = or_
        self.groups = groups

        tau = ps.tau_hat
        s1, s0 = groups.s1, groups.s0
        tau1 = tau[s1]
        tau0c = 1.0 - tau[s0]
        self._mc1 = np.ascontiguousarray((or_.m1_hat[s1] - or_.mbar1) / tau1)
        self._yt1 = np.ascontiguousarray(sample.y[s1] / tau1)
        self._w1 = np.ascontiguousarray(1.0 / tau1)
        self._mc0 = np.ascontiguousarray((or_.m0_hat[s0] - or_.mbar0) / tau0c)
        self._yt0 = np.ascontiguousarray(sample.y[s0] / tau0c)
        self._w0 = np.ascontiguousarray(1.0 / tau0c)
        self._point = None
        self._variance = None

    # -- point estimation ------------------------------------------------

    @property
    def point(self) -> Sel2Point:
        if self._point is None:
            self._point = self._solve_point()
        return self._point

    def _solve_point(self):
        sol1 = solve_dual(self._mc1[:, None])
        if not sol1.converged:
            raise HullViolationError(
                f"treated-arm weighted calibration infeasible ({sol1.status})", arm=1)
        sol0 = solve_dual(self._mc0[:, None])
        if not sol0.converged:
            raise HullViolationError(
                f"control-arm weighted calibration infeasible ({sol0.status})", arm=0)
        p1, p0 = sol1.weights, sol0.weights
        mu1 = float(p1 @ self._yt1) / float(p1 @ self._w1)
        mu0 = float(p0 @ self._yt0) / float(p0 @ self._w0)
        return Sel2Point(
            mu1_hat=mu1, mu0_hat=mu0, theta_hat=mu1 - mu0,
            lambda1=float(sol1.lam[0]), lambda0=float(sol0.lam[0]),
            weights_p1=p1, weights_p0=p0,
            loglik_global=sol1.loglik + sol0.loglik)

    # -- joint stationarity solve ------------------------------------------

    def solve_phi(self, theta: float, init: np.ndarray = None) -> PhiSolution:
        """Damped Newton for the stationary point of the joint objective at
        a fixed theta; init defaults to zero multipliers and the point-stage
        nuisance mean."""
        if init is None:
            init = np.array([0.0, 0.0, 0.0, 0.0, self.point.mu1_hat])
        else:
            init = np.asarray(init, dtype=float)
        phi, value, status, n_iter = kernels.phi_newton(
            self._mc1, self._yt1, self._w1, self._mc0, self._yt0, self._w0,
            float(theta), init, PHI_TOL, PHI_MAX_ITER)
        return PhiSolution(lambda1=phi[0:2], lambda0=phi[2:4], mu1=float(phi[4]),
                           loglik=float(value),
                           converged=status == kernels.STATUS_OK,
                           n_iter=n_iter)

    def loglik_at(self, phi: np.ndarray, theta: float) -> float:
        """Joint objective value at an arbitrary (phi, theta)."""
        score, _, _, _, value = kernels.phi_score_hess(
            self._mc1, self._yt1, self._w1, self._mc0, self._yt0, self._w0,
            float(theta), np.asarray(phi, dtype=float))
        return float(value)

    def ratio(self, theta: float, init: np.ndarray = None) -> float:
        """Log-likelihood ratio r(theta) <= 0; -inf on non-convergence."""
        sol = self.solve_phi(theta, init=init)
        if not sol.converged:
            # retry from the global stationary point, which has the exact
            # multipliers (lam_cal, 0) in each arm
            pt = self.point
            retry = np.array([pt.lambda1, 0.0, pt.lambda0, 0.0, pt.mu1_hat])
            sol = self.solve_phi(theta, init=retry)
            if not sol.converged:
                return -np.inf
        return sol.loglik - self.point.loglik_global

    # -- variance machinery ------------------------------------------------

    @property
    def variance(self) -> Sel2Variance:
        if self._variance is None:
            self._variance = self._solve_variance()
        return self._variance

    def _solve_variance(self):
        point = self.point
        n = self.sample.n
        g1 = np.column_stack([self._mc1, self._yt1 - point.mu1_hat * self._w1])
        g0 = np.column_stack([self._mc0,
                              self._yt0 - (point.mu1_hat - point.theta_hat) * self._w0])
        w21 = g1.T @ g1 / n
        w22 = g0.T @ g0 / n

        gamma = np.array([0.0, 1.0])
        e_hat = np.zeros((6, 6))
        e_hat[0:2, 0:2] = w21
        e_hat[2:4, 2:4] = w22
        e12 = np.zeros((4, 2))
        e12[0:2, 0] = gamma
        e12[2:4, 0] = gamma
        e12[2:4, 1] = -gamma
        e_hat[0:4, 4:6] = e12
        e_hat[4:6, 0:4] = e12.T

        f_hat = np.zeros((5, 5))
        f_hat[0:4, 0:4] = e_hat[0:4, 0:4]
        f12 = np.concatenate([gamma, gamma])
        f_hat[0:4, 4] = f12
        f_hat[4, 0:4] = f12

        try:
            e_inv = np.linalg.inv(e_hat)
            f_inv = np.linalg.inv(f_hat)
        except np.linalg.LinAlgError:
            raise NonConvergenceError(
                "near-degenerate constraint system: joint system matrix is "
                "singular") from None

        b_full = influence_matrix(self.sample, self.ps, self.or_,
                                  point.mu1_hat, point.theta_hat)
        omega = centered_covariance(b_full[:, [1, 2, 4, 5]])
        root = psd_sqrt(omega)
        delta_mat = root @ (f_inv[0:4, 0:4] - e_inv[0:4, 0:4]) @ root
        delta2, rank_residual = dominant_eigenvalue(delta_mat)

        e12_inv = e_inv[0:4, 4:6]
        v2 = e12_inv.T @ omega @ e12_inv
        se_mu1 = float(np.sqrt(max(v2[0, 0], 0.0) / n))
        se_theta = float(np.sqrt(max(v2[1, 1], 0.0) / n))
        return Sel2Variance(omega2=omega, e_hat=e_hat, f_hat=f_hat,
                            delta2=delta2, v2=v2, rank_residual=rank_residual,
                            se_mu1=se_mu1, se_theta=se_theta)

    # -- confidence interval ----------------------------------------------

    def ci_chisq(self, alpha: float = 0.05) -> IntervalResult:
        """Scaled chi-square ratio interval, with warm-started Newton solves
        along the bisection path."""
        var = self.variance
        if var.delta2 <= 0.0:
            raise NonConvergenceError(
                f"ratio scaling constant is not positive: {var.delta2}")
        q = chi2.ppf(1.0 - alpha, df=1)
        target = -0.5 * var.delta2 * q
        warm = {"phi": None}

        def ratio_warm(theta):
            sol = self.solve_phi(theta, init=warm["phi"])
            if not sol.converged:
                sol = self.solve_phi(theta, init=None)
            if not sol.converged:
                return -np.inf
            warm["phi"] = sol.as_vector()
            return sol.loglik - self.point.loglik_global

        return invert_ratio(ratio_warm, self.point.theta_hat, var.se_theta,
                            target, alpha)
