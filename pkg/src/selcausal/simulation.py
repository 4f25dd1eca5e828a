"""Monte Carlo study: data-generating process, scenario grid and metrics.

Covariates: x1 = v1, x2 = v2 + 0.2*x1, x3 = v3 + 0.3*(x1 + x2) with
v1 ~ N(0,1), v2 ~ Bernoulli(0.6), v3 ~ Exponential(1).  Treatment follows
a logistic model in (x1, x2, x3) whose intercept is calibrated so the
expected treated fraction equals t; outcomes are linear in the covariates
with noise scaled so the linear predictor / outcome correlation equals
rho.  Misspecified working models drop x3.

Because the main-study outcome means are 4.5 + x1 - 2*x2 + 3*x3 and
1 + x1 + x2 + 2*x3, the implied true ATE is 3.5 - 3*E[x2] + E[x3] = 2.88.
The power-study variant shifts the treated intercept by an arbitrary
true effect and uses the control intercept 3.88, keeping the ATE exactly
equal to the shift.
"""

import json
import math
import platform
import sys
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.stats import chi2

from . import kernels
from ._parallel import map_indices
from .baselines import aipw, hajek_ipw, ipw, naive_diff
from .bootstrap import bootstrap_ci, bootstrap_quantile, bootstrap_ratios
from .data import ObservedSample, PotentialSample, split_groups
from .errors import (CIRootError, DataValidationError, HullViolationError,
                     ModelFitError, NonConvergenceError)
from .models import ModelSpec, fit_logistic_ps, fit_ols_outcomes
from .sel1 import Sel1
from .sel2 import Sel2

THETA_MAIN = 2.88
CALIBRATION_SEED = 978_341
CALIBRATION_POP_SIZE = 1_000_000
ALPHA0_MEAN_TOL = 1e-4

POINT_ESTIMATORS = ("naive", "ipw", "hajek", "aipw", "sel1", "sel2")
INTERVAL_TYPES = ("selr1", "selr2", "selr1b", "selr2b")
SCENARIOS = ("TT", "TF", "FT")

_FAILURES = (ModelFitError, HullViolationError, NonConvergenceError,
             CIRootError, DataValidationError)


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell."""

    n: int
    t: float
    rho: float
    scenario: str
    theta_true: float = THETA_MAIN
    n_sim: int = 1000
    seed: int = 0
    outcome_model: str = "main"   # "main" or "power"

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise DataValidationError(f"t must be in (0,1), got {self.t}")
        if not 0.0 < self.rho < 1.0:
            raise DataValidationError(f"rho must be in (0,1), got {self.rho}")
        if self.n_sim < 1:
            raise DataValidationError("n_sim must be at least 1")
        if self.scenario not in SCENARIOS:
            raise DataValidationError(f"scenario must be one of {SCENARIOS}")
        if self.outcome_model not in ("main", "power"):
            raise DataValidationError("outcome_model must be 'main' or 'power'")
        if self.outcome_model == "main" and self.theta_true != THETA_MAIN:
            raise DataValidationError(
                f"main-study outcome models imply theta_true={THETA_MAIN}")


@dataclass(frozen=True)
class CellResult:
    """Aggregated metrics for one estimator or interval type in one cell."""

    n: int
    t: float
    rho: float
    scenario: str
    estimator: str
    interval_type: str       # "" for point-estimator rows
    rb_pct: float = None     # absolute bias instead when rb_absolute
    mse: float = None
    cp_pct: float = None
    al: float = None
    n_dropped: int = 0
    rb_absolute: bool = False


@dataclass(frozen=True)
class PowerResult:
    theta_true: float
    method: str
    rejection_rate: float
    n_dropped: int


# -- calibration of the generating constants ------------------------------

@lru_cache(maxsize=4)
def _covariate_population(seed):
    rng = np.random.default_rng(seed)
    n = CALIBRATION_POP_SIZE
    v1 = rng.standard_normal(n)
    v2 = (rng.random(n) < 0.6).astype(float)
    v3 = rng.exponential(1.0, n)
    x1 = v1
    x2 = v2 + 0.2 * x1
    x3 = v3 + 0.3 * (x1 + x2)
    return x1, x2, x3


def _ps_linear_predictor(x1, x2, x3):
    return 0.2 * x1 + 0.2 * x2 - 0.5 * x3


@lru_cache(maxsize=32)
def calibrate_alpha0(t: float, seed: int = CALIBRATION_SEED) -> float:
    """Intercept making the mean propensity over a fixed million-draw
    covariate population equal t, by bisection (monotone in the intercept)."""
    x1, x2, x3 = _covariate_population(seed)
    lp = _ps_linear_predictor(x1, x2, x3)

    def mean_ps(a0):
        return float(kernels.expit(a0 + lp).mean())

    lo, hi = -20.0, 20.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        m = mean_ps(mid)
        if abs(m - t) < ALPHA0_MEAN_TOL:
            return mid
        if m < t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=32)
def calibrate_noise(rho: float, arm: int, seed: int = CALIBRATION_SEED) -> float:
    """Noise scale a with corr(lp, lp + a*eps) = rho for the arm's linear
    predictor, using the centered standard deviation on the calibration
    population: a = sd(lp) * sqrt(1/rho^2 - 1)."""
    x1, x2, x3 = _covariate_population(seed)
    if arm == 1:
        lp = x1 - 2.0 * x2 + 3.0 * x3
    elif arm == 0:
        lp = x1 + x2 + 2.0 * x3
    else:
        raise ValueError(f"arm must be 0 or 1, got {arm}")
    return float(lp.std() * math.sqrt(1.0 / rho ** 2 - 1.0))


# -- data generation -------------------------------------------------------

def generate_sample(config: ScenarioConfig, replicate: int):
    """Draw one replicate; the stream is derived from (seed, 0, replicate)."""
    rng = np.random.default_rng((config.seed, 0, replicate))
    n = config.n
    v1 = rng.standard_normal(n)
    v2 = (rng.random(n) < 0.6).astype(float)
    v3 = rng.exponential(1.0, n)
    u_t = rng.random(n)
    eps = rng.standard_normal(n)

    x1 = v1
    x2 = v2 + 0.2 * x1
    x3 = v3 + 0.3 * (x1 + x2)
    alpha0 = calibrate_alpha0(config.t)
    tau0 = kernels.expit(alpha0 + _ps_linear_predictor(x1, x2, x3))
    t = (u_t < tau0).astype(float)

    a1 = calibrate_noise(config.rho, 1)
    a0 = calibrate_noise(config.rho, 0)
    if config.outcome_model == "main":
        y1 = 4.5 + x1 - 2.0 * x2 + 3.0 * x3 + a1 * eps
        y0 = 1.0 + x1 + x2 + 2.0 * x3 + a0 * eps
    else:
        y1 = config.theta_true + 4.5 + x1 - 2.0 * x2 + 3.0 * x3 + a1 * eps
        y0 = 3.88 + x1 + x2 + 2.0 * x3 + a0 * eps
    y = t * y1 + (1.0 - t) * y0
    sample = ObservedSample(x=np.column_stack([x1, x2, x3]), t=t, y=y)
    return sample, PotentialSample(y1=y1, y0=y0, tau0=tau0)


def scenario_spec(scenario: str) -> ModelSpec:
    """Working-model covariate sets: misspecified models omit x3."""
    full = (0, 1, 2)
    reduced = (0, 1)
    if scenario == "TT":
        return ModelSpec(ps_covariates=full, or_covariates=full)
    if scenario == "TF":
        return ModelSpec(ps_covariates=full, or_covariates=reduced)
    if scenario == "FT":
        return ModelSpec(ps_covariates=reduced, or_covariates=full)
    raise DataValidationError(f"unknown scenario {scenario!r}")


# -- per-replicate evaluation ----------------------------------------------

def _fit_contexts(sample, spec):
    ps = fit_logistic_ps(sample, spec)
    or_ = fit_ols_outcomes(sample, split_groups(sample), spec)
    return ps, or_


def _cell_replicate(rep, config, estimators, intervals, alpha, b_boot):
    sample, _ = generate_sample(config, rep)
    spec = scenario_spec(config.scenario)
    est = dict.fromkeys(estimators)
    ci = dict.fromkeys(intervals)

    ps = or_ = None
    try:
        ps, or_ = _fit_contexts(sample, spec)
    except _FAILURES:
        pass

    if "naive" in est:
        est["naive"] = naive_diff(sample)
    if ps is not None:
        if "ipw" in est:
            est["ipw"] = ipw(sample, ps)
        if "hajek" in est:
            est["hajek"] = hajek_ipw(sample, ps)
        if "aipw" in est and or_ is not None:
            est["aipw"] = aipw(sample, ps, or_)

    iv_base = {iv: ("sel1" if iv.startswith("selr1") else "sel2") for iv in intervals}
    contexts = {}
    if ps is not None and or_ is not None:
        for name, cls in (("sel1", Sel1), ("sel2", Sel2)):
            if name in est or name in iv_base.values():
                try:
                    ctx = cls(sample, ps, or_)
                    theta = ctx.point.theta_hat
                    contexts[name] = ctx
                    if name in est:
                        est[name] = theta
                except _FAILURES:
                    pass

    for iv in intervals:
        base = iv_base[iv]
        ctx = contexts.get(base)
        if ctx is None:
            continue
        try:
            if iv in ("selr1", "selr2"):
                res = ctx.ci_chisq(alpha)
            else:
                run = bootstrap_ratios(
                    sample, spec, base, ctx.point.theta_hat, b_boot,
                    seed=(config.seed, 1 if base == "sel1" else 2, rep))
                res = bootstrap_ci(ctx, run, alpha)
            ci[iv] = (res.lower, res.upper)
        except _FAILURES:
            pass
    return {"est": est, "ci": ci}


def run_cell(config: ScenarioConfig, estimators=POINT_ESTIMATORS,
             intervals=(), alpha=0.05, b_boot=1000, jobs=1):
    """Evaluate one simulation cell; returns one CellResult per estimator
    and per interval type.  Per-method failures are dropped and counted."""
    estimators = tuple(estimators)
    intervals = tuple(intervals)
    for name in estimators:
        if name not in POINT_ESTIMATORS:
            raise DataValidationError(f"unknown estimator {name!r}")
    for name in intervals:
        if name not in INTERVAL_TYPES:
            raise DataValidationError(f"unknown interval type {name!r}")

    records = map_indices(_cell_replicate, config.n_sim, jobs,
                          config, estimators, intervals, alpha, b_boot)
    theta0 = config.theta_true
    rows = []
    for name in estimators:
        vals = np.array([r["est"][name] for r in records
                         if r["est"][name] is not None], dtype=float)
        n_drop = config.n_sim - vals.shape[0]
        if vals.shape[0] == 0:
            rows.append(CellResult(config.n, config.t, config.rho, config.scenario,
                                   name, "", n_dropped=n_drop))
            continue
        bias = float(vals.mean() - theta0)
        absolute = theta0 == 0.0
        rb = bias if absolute else 100.0 * bias / theta0
        mse = float(((vals - theta0) ** 2).mean())
        rows.append(CellResult(config.n, config.t, config.rho, config.scenario,
                               name, "", rb_pct=rb, mse=mse,
                               n_dropped=n_drop, rb_absolute=absolute))
    for iv in intervals:
        base = "sel1" if iv.startswith("selr1") else "sel2"
        pairs = [r["ci"][iv] for r in records if r["ci"][iv] is not None]
        n_drop = config.n_sim - len(pairs)
        if not pairs:
            rows.append(CellResult(config.n, config.t, config.rho, config.scenario,
                                   base, iv, n_dropped=n_drop))
            continue
        arr = np.array(pairs, dtype=float)
        cp = 100.0 * float(((arr[:, 0] <= theta0) & (theta0 <= arr[:, 1])).mean())
        al = float((arr[:, 1] - arr[:, 0]).mean())
        rows.append(CellResult(config.n, config.t, config.rho, config.scenario,
                               base, iv, cp_pct=cp, al=al, n_dropped=n_drop))
    return rows


# -- power study ------------------------------------------------------------

def _power_replicate(rep, config, methods, alpha, b_boot):
    sample, _ = generate_sample(config, rep)
    spec = scenario_spec(config.scenario)
    out = dict.fromkeys(methods)
    try:
        ps, or_ = _fit_contexts(sample, spec)
    except _FAILURES:
        return out
    q = chi2.ppf(1.0 - alpha, df=1)
    for method in methods:
        base = "sel1" if method.startswith("selr1") else "sel2"
        cls = Sel1 if base == "sel1" else Sel2
        try:
            ctx = cls(sample, ps, or_)
            r0 = ctx.ratio(0.0)
            if method in ("selr1", "selr2"):
                delta = ctx.variance.delta1 if base == "sel1" else ctx.variance.delta2
                if delta <= 0.0:
                    continue
                out[method] = bool(not np.isfinite(r0) or -2.0 * r0 / delta > q)
            else:
                run = bootstrap_ratios(
                    sample, spec, base, ctx.point.theta_hat, b_boot,
                    seed=(config.seed, 1 if base == "sel1" else 2, rep))
                b_alpha = bootstrap_quantile(run, alpha)
                out[method] = bool(not r0 > b_alpha)
        except _FAILURES:
            continue
    return out


def power_curve(config: ScenarioConfig, theta_grid, methods=("selr1", "selr2"),
                alpha=0.05, b_boot=1000, jobs=1):
    """Rejection rate of the test of a zero effect at each true effect.

    At a true effect of zero this is the empirical size, otherwise power.
    """
    theta_grid = [float(v) for v in theta_grid]
    if not theta_grid:
        raise DataValidationError("theta grid must be nonempty")
    for name in methods:
        if name not in INTERVAL_TYPES:
            raise DataValidationError(f"unknown interval type {name!r}")
    rows = []
    for theta in theta_grid:
        cfg = replace(config, theta_true=theta, outcome_model="power")
        records = map_indices(_power_replicate, cfg.n_sim, jobs,
                              cfg, tuple(methods), alpha, b_boot)
        for method in methods:
            vals = [r[method] for r in records if r[method] is not None]
            n_drop = cfg.n_sim - len(vals)
            rate = float(np.mean(vals)) if vals else float("nan")
            rows.append(PowerResult(theta_true=theta, method=method,
                                    rejection_rate=rate, n_dropped=n_drop))
    return rows


# -- serialization -----------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    return f"{v:.10g}"


def write_cell_csv(rows, path):
    """Point metrics and interval metrics in one flat table; MSE and AL are
    scaled by 100 here, matching how results are conventionally tabulated."""
    with open(path, "w", newline="") as fh:
        fh.write("n,t,rho,scenario,estimator,interval_type,"
                 "rb_pct,mse_x100,cp_pct,al_x100,n_dropped\n")
        for r in rows:
            mse = None if r.mse is None else 100.0 * r.mse
            al = None if r.al is None else 100.0 * r.al
            fh.write(",".join([
                str(r.n), _fmt(r.t), _fmt(r.rho), r.scenario, r.estimator,
                r.interval_type, _fmt(r.rb_pct), _fmt(mse), _fmt(r.cp_pct),
                _fmt(al), str(r.n_dropped)]) + "\n")


def write_power_csv(rows, path):
    with open(path, "w", newline="") as fh:
        fh.write("theta_true,method,rejection_rate,n_dropped\n")
        for r in rows:
            fh.write(",".join([_fmt(r.theta_true), r.method,
                               _fmt(r.rejection_rate), str(r.n_dropped)]) + "\n")


def write_manifest(path, configs, seed, alpha, b_boot, timestamp=None):
    """Run provenance: seeds, calibration constants, tolerances, versions."""
    import numba
    import scipy

    calibration = {}
    for cfg in configs:
        key = f"t={cfg.t:g}"
        calibration.setdefault(key, {"alpha0": calibrate_alpha0(cfg.t)})
        key = f"rho={cfg.rho:g}"
        calibration.setdefault(key, {
            "a1": calibrate_noise(cfg.rho, 1),
            "a0": calibrate_noise(cfg.rho, 0),
        })
    manifest = {
        "seed": seed,
        "alpha": alpha,
        "b_boot": b_boot,
        "cells": [
            {"n": c.n, "t": c.t, "rho": c.rho, "scenario": c.scenario,
             "theta_true": c.theta_true, "n_sim": c.n_sim,
             "outcome_model": c.outcome_model}
            for c in configs
        ],
        "calibration": calibration,
        "calibration_seed": CALIBRATION_SEED,
        "calibration_population": CALIBRATION_POP_SIZE,
        "tolerances": {
            "dual_gradient": 1e-9,
            "constraint_residual": 1e-8,
            "profile_mu1": 1e-6,
            "alpha0_mean": ALPHA0_MEAN_TOL,
        },
        "versions": {
            "python": sys.version.split()[0],
            "platform": platform.platform(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
            "backend": kernels.BACKEND,
        },
    }
    if timestamp is not None:
        manifest["timestamp"] = timestamp
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def full_grid(n_sim=1000, seed=0):
    """All 81 cells of the main study."""
    cells = []
    for n in (100, 200, 400):
        for t in (0.3, 0.5, 0.7):
            for rho in (0.3, 0.5, 0.7):
                for scenario in SCENARIOS:
                    cells.append(ScenarioConfig(n=n, t=t, rho=rho,
                                                scenario=scenario,
                                                n_sim=n_sim, seed=seed))
    return cells
