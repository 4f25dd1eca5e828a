"""ATE inference via sample empirical likelihood with propensity-score
calibration constraints.

The treated-arm EL weights are calibrated so that their weighted averages
of the fitted propensity scores and of the fitted outcome predictions
match the corresponding full-sample means (and symmetrically for the
control arm with 1 - tau).  Point estimation reduces to two independent
dual solves after rescaling the weights by tau / taubar; inference profiles
the joint likelihood over the nuisance mean mu1 at each candidate theta.
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

PROFILE_XTOL = 1e-6
PROFILE_BRACKET_SCALE = 8.0
PROFILE_MAX_EXPAND = 6


@dataclass(frozen=True)
class Sel1Point:
    """Point estimates and calibrated weights (p-scale, per arm)."""

    mu1_hat: float
    mu0_hat: float
    theta_hat: float
    lambda1q: np.ndarray
    lambda0q: np.ndarray
    weights_p1: np.ndarray
    weights_p0: np.ndarray
    loglik_global: float   # up-to-constant convention, see elsolver


@dataclass(frozen=True)
class Sel1Variance:
    """Plug-in variance machinery for the ratio statistic and Wald scale."""

    omega1: np.ndarray     # 6x6 influence covariance
    a_hat: np.ndarray      # 8x8 joint system matrix
    b_hat: np.ndarray      # 7x7 theta-restricted system matrix
    delta1: float          # scaling constant of the ratio statistic
    v1: np.ndarray         # 2x2 asymptotic covariance of sqrt(n)*(mu1, theta)
    rank_residual: float   # second-largest |eigenvalue| of the delta matrix
    se_mu1: float
    se_theta: float


class Sel1:
    """Inference context bound to one sample and its fitted nuisances."""

    def __init__(self, sample: ObservedSample, ps: PsFit, or_: OrFit):
        groups = split_groups(sample)
        if groups.n1 < 3 or groups.n0 < 3:
            raise NonConvergenceError("each arm needs at least 3 units")
        self.sample = sample
        self.ps = ps
        self.or_ = or_
        self.groups = groups

        tau = ps.tau_hat
        taubar = float(tau.mean())
        s1, s0 = groups.s1, groups.s0
        tau1 = tau[s1]
        tau0c = 1.0 - tau[s0]
        y1 = sample.y[s1]
        y0 = sample.y[s0]

        self.taubar = taubar
        self._c1 = np.ascontiguousarray(np.column_stack([
            (tau1 - taubar) / tau1,
            (or_.m1_hat[s1] - or_.mbar1) / tau1,
        ]))
        self._yt1 = np.ascontiguousarray(y1 / tau1)
        self._w1 = np.ascontiguousarray(1.0 / tau1)
        self._c0 = np.ascontiguousarray(np.column_stack([
            (tau0c - (1.0 - taubar)) / tau0c,
            (or_.m0_hat[s0] - or_.mbar0) / tau0c,
        ]))
        self._yt0 = np.ascontiguousarray(y0 / tau0c)
        self._w0 = np.ascontiguousarray(1.0 / tau0c)
        self._point = None
        self._variance = None

    # -- point estimation ------------------------------------------------

    @property
    def point(self) -> Sel1Point:
        if self._point is None:
            self._point = self._solve_point()
        return self._point

    def _solve_point(self):
        sol1 = solve_dual(self._c1)
        if not sol1.converged:
            raise HullViolationError(
                f"treated-arm calibration infeasible ({sol1.status})", arm=1)
        sol0 = solve_dual(self._c0)
        if not sol0.converged:
            raise HullViolationError(
                f"control-arm calibration infeasible ({sol0.status})", arm=0)
        q1, q0 = sol1.weights, sol0.weights
        mu1 = self.taubar * float(q1 @ self._yt1)
        mu0 = (1.0 - self.taubar) * float(q0 @ self._yt0)
        p1 = self.taubar * q1 * self._w1
        p0 = (1.0 - self.taubar) * q0 * self._w0
        return Sel1Point(
            mu1_hat=mu1, mu0_hat=mu0, theta_hat=mu1 - mu0,
            lambda1q=sol1.lam, lambda0q=sol0.lam,
            weights_p1=p1, weights_p0=p0,
            loglik_global=sol1.loglik + sol0.loglik)

    # -- profile likelihood ----------------------------------------------

    def profile_loglik(self, mu1: float, theta: float) -> float:
        """Joint restricted log-likelihood at fixed (mu1, theta); -inf when
        either arm's constraint set is infeasible."""
        val, _ = kernels.pair_loglik(
            self._c1, self._yt1, self._w1, self._c0, self._yt0, self._w0,
            float(mu1), float(theta), DUAL_TOL, DUAL_MAX_ITER)
        return float(val)

    def profile_mu1(self, theta: float):
        """Maximize the restricted log-likelihood over mu1 at fixed theta.

        Returns (mu1_star, loglik); raises HullViolationError when no
        feasible mu1 exists.
        """
        point = self.point
        mu, val, status = kernels.profile_mu1(
            self._c1, self._yt1, self._w1, self._c0, self._yt0, self._w0,
            float(theta), point.mu1_hat, self._bracket_halfwidth(),
            PROFILE_XTOL, DUAL_TOL, DUAL_MAX_ITER, PROFILE_MAX_EXPAND)
        if status != kernels.STATUS_OK:
            raise HullViolationError(
                f"no feasible nuisance mean at theta={theta}")
        return float(mu), float(val)

    def _bracket_halfwidth(self):
        try:
            se = self.variance.se_mu1
        except NonConvergenceError:
            se = float(np.std(self.sample.y[self.groups.s1]) / np.sqrt(self.groups.n1))
        if not np.isfinite(se) or se <= 0.0:
            se = max(1e-8, abs(self.point.mu1_hat) * 1e-3)
        return PROFILE_BRACKET_SCALE * se

    def ratio(self, theta: float) -> float:
        """Log-likelihood ratio r(theta) <= 0; -inf when infeasible."""
        try:
            _, val = self.profile_mu1(theta)
        except HullViolationError:
            return -np.inf
        return val - self.point.loglik_global

    # -- variance machinery ------------------------------------------------

    @property
    def variance(self) -> Sel1Variance:
        if self._variance is None:
            self._variance = self._solve_variance()
        return self._variance

    def _constraint_vectors(self, mu1, theta):
        g1 = np.column_stack([self._c1, self._yt1 - mu1 * self._w1])
        g0 = np.column_stack([self._c0, self._yt0 - (mu1 - theta) * self._w0])
        return g1, g0

    def _solve_variance(self):
        point = self.point
        n = self.sample.n
        g1, g0 = self._constraint_vectors(point.mu1_hat, point.theta_hat)
        w11 = g1.T @ g1 / n
        w12 = g0.T @ g0 / n

        gamma = np.array([0.0, 0.0, 1.0])
        a_hat = np.zeros((8, 8))
        a_hat[0:3, 0:3] = w11
        a_hat[3:6, 3:6] = w12
        a12 = np.zeros((6, 2))
        a12[0:3, 0] = gamma
        a12[3:6, 0] = gamma
        a12[3:6, 1] = -gamma
        a_hat[0:6, 6:8] = a12
        a_hat[6:8, 0:6] = a12.T

        b_hat = np.zeros((7, 7))
        b_hat[0:6, 0:6] = a_hat[0:6, 0:6]
        b12 = np.concatenate([gamma, gamma])
        b_hat[0:6, 6] = b12
        b_hat[6, 0:6] = b12

        try:
            a_inv = np.linalg.inv(a_hat)
            b_inv = np.linalg.inv(b_hat)
        except np.linalg.LinAlgError:
            raise NonConvergenceError(
                "near-degenerate constraint system: joint system matrix is "
                "singular") from None

        omega = centered_covariance(influence_matrix(
            self.sample, self.ps, self.or_, point.mu1_hat, point.theta_hat))
        root = psd_sqrt(omega)
        delta_mat = root @ (b_inv[0:6, 0:6] - a_inv[0:6, 0:6]) @ root
        delta1, rank_residual = dominant_eigenvalue(delta_mat)

        a12_inv = a_inv[0:6, 6:8]
        v1 = a12_inv.T @ omega @ a12_inv
        se_mu1 = float(np.sqrt(max(v1[0, 0], 0.0) / n))
        se_theta = float(np.sqrt(max(v1[1, 1], 0.0) / n))
        return Sel1Variance(omega1=omega, a_hat=a_hat, b_hat=b_hat,
                            delta1=delta1, v1=v1, rank_residual=rank_residual,
                            se_mu1=se_mu1, se_theta=se_theta)

    # -- confidence interval ----------------------------------------------

    def ci_chisq(self, alpha: float = 0.05) -> IntervalResult:
        """Scaled chi-square ratio interval {theta : -2 r(theta)/delta <= q}."""
        var = self.variance
        if var.delta1 <= 0.0:
            raise NonConvergenceError(
                f"ratio scaling constant is not positive: {var.delta1}")
        q = chi2.ppf(1.0 - alpha, df=1)
        target = -0.5 * var.delta1 * q
        return invert_ratio(self.ratio, self.point.theta_hat, var.se_theta,
                            target, alpha)
