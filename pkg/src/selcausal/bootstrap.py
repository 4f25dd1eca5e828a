"""Bootstrap calibration of the SEL ratio statistics.

Each replicate resamples n units with replacement, refits both nuisance
models on the resampled data, rebuilds every calibration target from the
resample, and evaluates that sample's ratio function at the original
point estimate.  The empirical lower-alpha quantile of the collected
ratios replaces the scaled chi-square threshold when inverting the
original sample's ratio function.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .data import ObservedSample
from .errors import (HullViolationError, ModelFitError, NonConvergenceError,
                     PositivityWarning)
from .models import ModelSpec, fit_logistic_ps, fit_ols_outcomes
from .data import split_groups
from .ratio_ci import IntervalResult, invert_ratio
from .sel1 import Sel1
from .sel2 import Sel2

MAX_REDRAWS = 10
MAX_FAILURE_FRACTION = 0.2

_METHODS = {"sel1": Sel1, "sel2": Sel2}


@dataclass(frozen=True)
class BootstrapRun:
    method: str
    b_total: int
    ratios: np.ndarray     # retained log-ratios, one per successful replicate
    n_failed: int
    seed: tuple


def _seed_tuple(seed):
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def _degenerate(t_idx, k_or, k_ps):
    n1 = int(t_idx.sum())
    n0 = t_idx.shape[0] - n1
    need = max(k_or, k_ps) + 1
    return n1 < need or n0 < need


def bootstrap_replicate(sample, spec, method, theta_hat, seed, b):
    """One bootstrap ratio evaluation; returns a float or None on failure."""
    rng = np.random.default_rng((*_seed_tuple(seed), b))
    n = sample.n
    k_or = 1 + len(spec.or_covariates)
    k_ps = 1 + len(spec.ps_covariates)
    for _ in range(MAX_REDRAWS + 1):
        idx = rng.integers(0, n, size=n)
        if not _degenerate(sample.t[idx], k_or, k_ps):
            break
    else:
        return None
    try:
        with warnings.catch_warnings():
            # extreme resampled weights are routine; the diagnostic belongs
            # to the original-sample fit
            warnings.simplefilter("ignore", PositivityWarning)
            bs = ObservedSample(x=sample.x[idx], t=sample.t[idx].astype(float),
                                y=sample.y[idx])
            ps = fit_logistic_ps(bs, spec)
            or_ = fit_ols_outcomes(bs, split_groups(bs), spec)
            ctx = _METHODS[method](bs, ps, or_)
            r = ctx.ratio(theta_hat)
    except (ModelFitError, HullViolationError, NonConvergenceError):
        return None
    if not np.isfinite(r):
        return None
    return float(r)


def bootstrap_ratios(sample: ObservedSample, spec: ModelSpec, method: str,
                     theta_hat: float, b_total: int = 1000,
                     seed=0) -> BootstrapRun:
    """Collect the ratio statistic at theta_hat over b_total resamples.

    Replicates with degenerate resamples (after MAX_REDRAWS redraws),
    failed model fits, or non-convergent likelihood solves are dropped and
    counted.  More than 20% failures is treated as evidence of pathological
    data and raised as an error.
    """
    if method not in _METHODS:
        raise ValueError(f"method must be one of {sorted(_METHODS)}, got {method!r}")
    if b_total < 100:
        raise ValueError(f"need at least 100 bootstrap replicates, got {b_total}")
    seed_t = _seed_tuple(seed)
    ratios = []
    n_failed = 0
    for b in range(b_total):
        r = bootstrap_replicate(sample, spec, method, theta_hat, seed_t, b)
        if r is None:
            n_failed += 1
        else:
            ratios.append(r)
    if n_failed > MAX_FAILURE_FRACTION * b_total:
        raise NonConvergenceError(
            f"{n_failed}/{b_total} bootstrap replicates failed; "
            "data too unstable for bootstrap calibration")
    return BootstrapRun(method=method, b_total=b_total,
                        ratios=np.array(sorted(ratios)), n_failed=n_failed,
                        seed=seed_t)


def bootstrap_quantile(run: BootstrapRun, alpha: float) -> float:
    """Lower-alpha empirical quantile: the order statistic at the 1-based
    index ceil(alpha * #retained)."""
    n_kept = run.ratios.shape[0]
    if n_kept == 0:
        raise NonConvergenceError("no retained bootstrap replicates")
    k = max(1, math.ceil(alpha * n_kept))
    return float(run.ratios[k - 1])


def bootstrap_ci(ctx, run: BootstrapRun, alpha: float = 0.05) -> IntervalResult:
    """Bootstrap-calibrated interval {theta : r(theta) > b_alpha}, with r
    the original sample's ratio function (ctx is its Sel1/Sel2 context)."""
    b_alpha = bootstrap_quantile(run, alpha)
    return invert_ratio(ctx.ratio, ctx.point.theta_hat, ctx.variance.se_theta,
                        b_alpha, alpha)
