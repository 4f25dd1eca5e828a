import numpy as np
import pytest
from scipy.stats import chi2

from selcausal import kernels
from selcausal import simulation as sim
from selcausal.baselines import hajek_ipw
from selcausal.data import split_groups
from selcausal.models import ModelSpec, fit_logistic_ps, fit_ols_outcomes
from selcausal.sel2 import Sel2

from conftest import make_tt


def build(sample, scenario="TT"):
    spec = sim.scenario_spec(scenario)
    ps = fit_logistic_ps(sample, spec)
    or_ = fit_ols_outcomes(sample, split_groups(sample), spec)
    return Sel2(sample, ps, or_)


def nested_ratio(ctx, theta):
    """Test oracle: the same ratio through 1-d profiling of the nuisance
    mean with per-arm dual solves instead of the joint Newton system.
    Returns -inf when no feasible nuisance mean exists."""
    mc1 = ctx._mc1[:, None]
    mc0 = ctx._mc0[:, None]
    mu, val, status = kernels.profile_mu1(
        mc1, ctx._yt1, ctx._w1, mc0, ctx._yt0, ctx._w0, float(theta),
        ctx.point.mu1_hat, 8.0 * ctx.variance.se_mu1, 1e-8, 1e-11, 200, 6)
    if status != kernels.STATUS_OK:
        return -np.inf
    return val - ctx.point.loglik_global


def test_constant_predictions_reduce_to_hajek(tt400):
    # a constant fitted outcome makes the weighted calibration vacuous
    sample, _, ps, _ = tt400
    or_flat = fit_ols_outcomes(sample, split_groups(sample),
                               ModelSpec(ps_covariates=(), or_covariates=()))
    ctx = Sel2(sample, ps, or_flat)
    pt = ctx.point
    g = split_groups(sample)
    assert pt.lambda1 == pytest.approx(0.0, abs=1e-10)
    assert pt.weights_p1 == pytest.approx(np.full(g.n1, 1 / g.n1), abs=1e-12)
    assert pt.theta_hat == pytest.approx(hajek_ipw(sample, ps), abs=1e-10)


def test_weighted_calibration_holds(tt400):
    sample, _, ps, or_ = tt400
    ctx = Sel2(sample, ps, or_)
    pt = ctx.point
    g = split_groups(sample)
    tau = ps.tau_hat
    r1 = pt.weights_p1 @ ((or_.m1_hat[g.s1] - or_.mbar1) / tau[g.s1])
    r0 = pt.weights_p0 @ ((or_.m0_hat[g.s0] - or_.mbar0) / (1 - tau[g.s0]))
    assert abs(r1) < 1e-8 and abs(r0) < 1e-8
    rmu = pt.weights_p1 @ ((sample.y[g.s1] - pt.mu1_hat) / tau[g.s1])
    assert abs(rmu) < 1e-8


def test_phi_solution_at_point_is_global(tt400):
    sample, _, ps, or_ = tt400
    ctx = Sel2(sample, ps, or_)
    pt = ctx.point
    sol = ctx.solve_phi(pt.theta_hat)
    assert sol.converged
    assert sol.lambda1 == pytest.approx([pt.lambda1, 0.0], abs=1e-8)
    assert sol.lambda0 == pytest.approx([pt.lambda0, 0.0], abs=1e-8)
    assert sol.mu1 == pytest.approx(pt.mu1_hat, abs=1e-8)
    assert sol.loglik == pytest.approx(pt.loglik_global, abs=1e-9)


def test_phi_matches_nested_profiling_small_sample():
    # n1 = n0 = 4 is enough for the weighted formulation
    rng = np.random.default_rng(17)
    from selcausal.data import ObservedSample
    x = rng.standard_normal((8, 1))
    t = np.r_[np.ones(4), np.zeros(4)]
    y = 1.0 + 0.8 * x[:, 0] + t * 1.5 + rng.standard_normal(8) * 0.5
    sample = ObservedSample(x=x, t=t, y=y)
    spec = ModelSpec.full(1)
    ps = fit_logistic_ps(sample, spec)
    or_ = fit_ols_outcomes(sample, split_groups(sample), spec)
    ctx = Sel2(sample, ps, or_)
    for d in (0.0, 0.25, -0.3):
        theta = ctx.point.theta_hat + d
        r_joint = ctx.ratio(theta)
        r_nested = nested_ratio(ctx, theta)
        if np.isinf(r_nested):
            assert np.isinf(r_joint)
        else:
            assert r_joint == pytest.approx(r_nested, abs=1e-5)


def test_phi_matches_nested_profiling_tt(tt400):
    sample, _, ps, or_ = tt400
    ctx = Sel2(sample, ps, or_)
    for d in (0.15, -0.4):
        theta = ctx.point.theta_hat + d
        assert ctx.ratio(theta) == pytest.approx(nested_ratio(ctx, theta), abs=1e-5)


def test_warm_started_continuation_is_cheap(tt400):
    sample, _, ps, or_ = tt400
    ctx = Sel2(sample, ps, or_)
    se = ctx.variance.se_theta
    grid = ctx.point.theta_hat + np.linspace(-3 * se, 3 * se, 13)
    phi = None
    for theta in grid:
        sol = ctx.solve_phi(theta, init=phi)
        assert sol.converged
        assert sol.n_iter <= 10
        phi = sol.as_vector()


def test_ratio_shape(tt400):
    sample, _, ps, or_ = tt400
    ctx = Sel2(sample, ps, or_)
    th = ctx.point.theta_hat
    assert abs(ctx.ratio(th)) < 1e-6
    se = ctx.variance.se_theta
    left, mid, right = ctx.ratio(th - se), ctx.ratio(th), ctx.ratio(th + se)
    assert left < mid and right < mid
    assert left + right - 2 * mid < 0  # concave second difference


def test_variance_rank_one(tt400):
    sample, _, ps, or_ = tt400
    var = Sel2(sample, ps, or_).variance
    assert var.delta2 > 0
    assert var.rank_residual < 1e-6 * abs(var.delta2)
    assert var.omega2.shape == (4, 4)
    assert var.e_hat.shape == (6, 6) and var.f_hat.shape == (5, 5)


def test_ci_chisq_threshold_equation(tt400):
    sample, _, ps, or_ = tt400
    ctx = Sel2(sample, ps, or_)
    ci = ctx.ci_chisq(0.05)
    assert ci.lower < ctx.point.theta_hat < ci.upper
    q = chi2.ppf(0.95, 1)
    for ep in (ci.lower, ci.upper):
        assert -2 * ctx.ratio(ep) / ctx.variance.delta2 == pytest.approx(q, rel=1e-4)


def test_sel1_sel2_agree_on_well_specified_data(tt400):
    sample, _, ps, or_ = tt400
    from selcausal.sel1 import Sel1
    t1 = Sel1(sample, ps, or_).point.theta_hat
    c2 = Sel2(sample, ps, or_)
    assert abs(t1 - c2.point.theta_hat) < 2 * c2.variance.se_theta
