import numpy as np
import pytest

from selcausal.baselines import aipw, hajek_ipw, ipw, naive_diff
from selcausal.data import ObservedSample, split_groups
from selcausal.models import ModelSpec, PsFit, fit_logistic_ps, fit_ols_outcomes

INTERCEPT_ONLY = ModelSpec(ps_covariates=(), or_covariates=())


def constant_ps(sample):
    """Intercept-only logistic fit: tau_hat identically n1/n."""
    return fit_logistic_ps(sample, INTERCEPT_ONLY)


def test_naive_diff_constant_arms():
    s = ObservedSample(x=np.zeros((6, 1)), t=[1, 1, 1, 0, 0, 0],
                       y=[3, 3, 3, 1, 1, 1])
    assert naive_diff(s) == pytest.approx(2.0)


def test_constant_ps_reductions(tt400):
    # with tau_hat exactly constant, ipw and hajek collapse to the raw
    # mean difference
    sample = tt400[0]
    base = naive_diff(sample)
    exact = PsFit(alpha=np.zeros(1), tau_hat=np.full(sample.n, sample.t.mean()),
                  design=np.ones((sample.n, 1)), converged=True, n_iter=0)
    assert ipw(sample, exact) == pytest.approx(base, abs=1e-12)
    assert hajek_ipw(sample, exact) == pytest.approx(base, abs=1e-12)
    # the fitted intercept-only model agrees up to the IRLS tolerance
    fitted = constant_ps(sample)
    assert ipw(sample, fitted) == pytest.approx(base, abs=1e-6)
    assert hajek_ipw(sample, fitted) == pytest.approx(base, abs=1e-6)


def test_ipw_extreme_weight_is_finite():
    rng = np.random.default_rng(0)
    n = 20
    t = np.r_[np.ones(10), np.zeros(10)]
    y = rng.standard_normal(n)
    tau = np.full(n, 0.5)
    tau[0] = 1e-6
    ps = PsFit(alpha=np.zeros(1), tau_hat=tau, design=np.ones((n, 1)),
               converged=True, n_iter=0)
    s = ObservedSample(x=np.zeros((n, 1)), t=t, y=y)
    v = ipw(s, ps)
    assert np.isfinite(v)
    assert abs(v - y[0] / (n * 1e-6)) < abs(y[0] / (n * 1e-6)) * 0.5


def test_hajek_constant_outcomes_per_arm():
    rng = np.random.default_rng(1)
    n = 30
    t = (rng.random(n) < 0.5).astype(float)
    t[:2] = [1, 0]
    y = np.where(t == 1, 7.0, 4.0)
    tau = rng.uniform(0.2, 0.8, n)
    ps = PsFit(alpha=np.zeros(1), tau_hat=tau, design=np.ones((n, 1)),
               converged=True, n_iter=0)
    s = ObservedSample(x=np.zeros((n, 1)), t=t, y=y)
    assert hajek_ipw(s, ps) == pytest.approx(3.0, abs=1e-12)


def test_location_equivariance(tt400):
    sample, _, ps, or_ = tt400
    shifted = ObservedSample(x=sample.x, t=sample.t.astype(float), y=sample.y + 5.0)
    groups = split_groups(sample)
    spec = ModelSpec.full(3)
    ps2 = fit_logistic_ps(shifted, spec)
    or2 = fit_ols_outcomes(shifted, groups, spec)
    assert naive_diff(shifted) == pytest.approx(naive_diff(sample), abs=1e-10)
    assert hajek_ipw(shifted, ps2) == pytest.approx(hajek_ipw(sample, ps), abs=1e-8)
    assert aipw(shifted, ps2, or2) == pytest.approx(aipw(sample, ps, or_), abs=1e-8)


def test_aipw_with_perfect_outcome_model():
    rng = np.random.default_rng(4)
    n = 60
    x = rng.standard_normal((n, 2))
    t = (rng.random(n) < 0.5).astype(float)
    t[:2] = [1, 0]
    y = 2.0 + x @ np.array([1.0, -1.0])   # no noise, same model in both arms
    s = ObservedSample(x=x, t=t, y=y)
    spec = ModelSpec.full(2)
    ps = fit_logistic_ps(s, spec)
    or_ = fit_ols_outcomes(s, split_groups(s), spec)
    # residuals vanish, so the augmentation does and aipw is the mean
    # difference of the predictions
    assert aipw(s, ps, or_) == pytest.approx(or_.mbar1 - or_.mbar0, abs=1e-9)


def test_aipw_intercept_only_reduces_to_naive(tt400):
    sample = tt400[0]
    ps = constant_ps(sample)
    or_ = fit_ols_outcomes(sample, split_groups(sample), INTERCEPT_ONLY)
    assert aipw(sample, ps, or_) == pytest.approx(naive_diff(sample), abs=1e-10)
