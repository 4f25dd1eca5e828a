"""Working nuisance models: logistic propensity score and per-arm OLS."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import GroupIndex, ObservedSample
from .errors import ModelFitError, PositivityWarning

PS_TOL_SCORE = 1e-8
PS_TOL_STEP = 1e-10
PS_MAX_ITER = 50
POSITIVITY_EPS = 1e-10


@dataclass(frozen=True)
class ModelSpec:
    """Covariate subsets (0-based column indices of x) for each working model.

    Misspecification scenarios are expressed purely by dropping columns,
    e.g. omitting the last covariate from ps_covariates or or_covariates.
    """

    ps_covariates: tuple
    or_covariates: tuple

    def __post_init__(self):
        object.__setattr__(self, "ps_covariates", tuple(self.ps_covariates))
        object.__setattr__(self, "or_covariates", tuple(self.or_covariates))

    @staticmethod
    def full(p):
        cols = tuple(range(p))
        return ModelSpec(ps_covariates=cols, or_covariates=cols)

    def validate(self, p):
        for name, cols in (("ps", self.ps_covariates), ("or", self.or_covariates)):
            for c in cols:
                if not 0 <= c < p:
                    raise ModelFitError(f"{name}_covariates index {c} outside 0..{p-1}")


@dataclass(frozen=True)
class PsFit:
    """Fitted logistic propensity model.

    design is the n x (1+k) matrix with a leading intercept column;
    tau_hat = expit(design @ alpha).
    """

    alpha: np.ndarray
    tau_hat: np.ndarray
    design: np.ndarray
    converged: bool
    n_iter: int


@dataclass(frozen=True)
class OrFit:
    """Per-arm linear outcome regressions with predictions for every unit."""

    beta1: np.ndarray
    beta0: np.ndarray
    m1_hat: np.ndarray
    m0_hat: np.ndarray
    mbar1: float
    mbar0: float


def _design(sample, cols):
    return np.hstack([np.ones((sample.n, 1)), sample.x[:, list(cols)]])


def fit_logistic_ps(sample: ObservedSample, spec: ModelSpec) -> PsFit:
    """Maximum-likelihood logistic regression of treatment on covariates.

    Newton-Raphson (IRLS) with step halving; converged when the largest
    score component falls below 1e-8 or the relative coefficient change
    below 1e-10 (at most 50 iterations).  Non-convergence raises, since it
    typically signals complete separation.  Estimated scores are not
    clamped: values outside [1e-10, 1 - 1e-10] only emit a warning.
    """
    spec.validate(sample.p)
    x = np.ascontiguousarray(_design(sample, spec.ps_covariates))
    if np.linalg.matrix_rank(x) < x.shape[1]:
        raise ModelFitError("propensity design matrix is rank deficient")
    t = np.ascontiguousarray(sample.t, dtype=float)
    alpha, status, n_iter = kernels.logistic_irls(
        x, t, PS_TOL_SCORE, PS_TOL_STEP, PS_MAX_ITER)
    if status != kernels.STATUS_OK:
        raise ModelFitError(
            "propensity model did not converge in "
            f"{PS_MAX_ITER} iterations (possible complete separation)")
    tau = kernels.expit(x @ alpha)
    # complete separation: the score vanishes along a divergent path on
    # which every unit becomes perfectly classified and no MLE exists
    if np.max(np.abs(t - tau)) < 1e-6:
        raise ModelFitError(
            "treatment groups are completely separated; the propensity "
            "MLE does not exist")
    if np.any(tau < POSITIVITY_EPS) or np.any(tau > 1.0 - POSITIVITY_EPS):
        warnings.warn(
            "extreme fitted propensity scores detected; inverse weights may "
            "be unstable", PositivityWarning, stacklevel=2)
    return PsFit(alpha=alpha, tau_hat=tau, design=x, converged=True, n_iter=n_iter)


def fit_ols_outcomes(sample: ObservedSample, groups: GroupIndex,
                     spec: ModelSpec) -> OrFit:
    """Least-squares outcome regressions fit separately within each arm.

    Predictions m1_hat / m0_hat are produced for every unit in the sample;
    mbar1 / mbar0 are their means over all n units.
    """
    spec.validate(sample.p)
    x = _design(sample, spec.or_covariates)
    k = x.shape[1]
    betas = []
    for arm, idx in ((1, groups.s1), (0, groups.s0)):
        if idx.shape[0] <= k:
            raise ModelFitError(
                f"arm {arm} has {idx.shape[0]} units, need more than {k} "
                "to fit its outcome regression")
        xa = x[idx]
        if np.linalg.matrix_rank(xa) < k:
            raise ModelFitError(f"arm {arm} outcome design matrix is rank deficient")
        beta, *_ = np.linalg.lstsq(xa, sample.y[idx], rcond=None)
        betas.append(beta)
    beta1, beta0 = betas
    m1 = x @ beta1
    m0 = x @ beta0
    return OrFit(beta1=beta1, beta0=beta0, m1_hat=m1, m0_hat=m0,
                 mbar1=float(m1.mean()), mbar0=float(m0.mean()))
