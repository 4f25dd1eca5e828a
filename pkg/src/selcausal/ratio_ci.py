"""Inversion of a likelihood-ratio function into a confidence interval.

Shared by the scaled-chi-square and bootstrap-calibrated intervals: both
are sublevel sets {theta : r(theta) > target} of a ratio function that is
zero at the point estimate and decreases away from it.  Infeasible
evaluations (hull failures, non-convergence sentinels, -inf) count as
"below the threshold", i.e. outside the interval; their number is
reported for diagnostics.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CIRootError

MAX_EXPAND = 6


@dataclass(frozen=True)
class IntervalResult:
    lower: float
    upper: float
    alpha: float
    target: float          # r-threshold defining the interval
    n_infeasible: int      # ratio evaluations that hit hull/convergence failures

    @property
    def length(self):
        return self.upper - self.lower

    def contains(self, value):
        return self.lower <= value <= self.upper


class _CountingRatio:
    def __init__(self, fn):
        self.fn = fn
        self.n_infeasible = 0

    def __call__(self, theta):
        v = self.fn(theta)
        if not np.isfinite(v):
            self.n_infeasible += 1
            return -np.inf
        return v


def invert_ratio(ratio_fn, theta_hat, se, target, alpha, xtol_rel=1e-5) -> IntervalResult:
    """Find {theta : ratio_fn(theta) > target} by bisection on each side.

    Initial brackets theta_hat +/- 4*se, doubled up to MAX_EXPAND times
    until the ratio crosses the (negative) target; endpoint tolerance
    xtol_rel * se.
    """
    if not np.isfinite(se) or se <= 0.0:
        raise CIRootError(f"invalid scale for bracketing: se={se}")
    if target >= 0.0:
        raise CIRootError(f"ratio threshold must be negative, got {target}")
    counting = _CountingRatio(ratio_fn)
    xtol = xtol_rel * se
    upper = _crossing(counting, theta_hat, se, target, +1.0, xtol)
    lower = _crossing(counting, theta_hat, se, target, -1.0, xtol)
    return IntervalResult(lower=lower, upper=upper, alpha=alpha, target=target,
                          n_infeasible=counting.n_infeasible)


def _crossing(ratio, theta_hat, se, target, direction, xtol):
    inner = theta_hat
    width = 4.0 * se
    outer = theta_hat + direction * width
    for _ in range(MAX_EXPAND + 1):
        if ratio(outer) <= target:
            break
        inner = outer
        width *= 2.0
        outer = theta_hat + direction * width
    else:
        raise CIRootError(
            "ratio never crossed the interval threshold within "
            f"{4 * 2 ** MAX_EXPAND} standard errors (direction {direction:+.0f})")
    while abs(outer - inner) > xtol:
        mid = 0.5 * (inner + outer)
        if ratio(mid) > target:
            inner = mid
        else:
            outer = mid
    return 0.5 * (inner + outer)
