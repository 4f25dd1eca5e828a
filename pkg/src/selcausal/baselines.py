"""Reference estimators of the average treatment effect.

Used for cross-checks and as comparison arms of the simulation study.
No weight truncation anywhere.
"""

import numpy as np

from .data import ObservedSample, GroupIndex, split_groups
from .models import PsFit, OrFit


def naive_diff(sample: ObservedSample, groups: GroupIndex = None) -> float:
    """Difference of raw arm means (valid only under randomization)."""
    if groups is None:
        groups = split_groups(sample)
    return float(sample.y[groups.s1].mean() - sample.y[groups.s0].mean())


def ipw(sample: ObservedSample, ps: PsFit) -> float:
    """Inverse-probability-weighted mean difference with 1/n normalization."""
    t = sample.t
    n = sample.n
    tau = ps.tau_hat
    term1 = np.sum(sample.y[t == 1] / tau[t == 1]) / n
    term0 = np.sum(sample.y[t == 0] / (1.0 - tau[t == 0])) / n
    return float(term1 - term0)


def hajek_ipw(sample: ObservedSample, ps: PsFit) -> float:
    """IPW with the sample size replaced by the sum of weights in each arm."""
    t = sample.t
    tau = ps.tau_hat
    w1 = 1.0 / tau[t == 1]
    w0 = 1.0 / (1.0 - tau[t == 0])
    mu1 = np.sum(sample.y[t == 1] * w1) / w1.sum()
    mu0 = np.sum(sample.y[t == 0] * w0) / w0.sum()
    return float(mu1 - mu0)


def aipw(sample: ObservedSample, ps: PsFit, or_: OrFit) -> float:
    """Augmented IPW: outcome-regression imputation plus the weighted
    residual correction, doubly robust."""
    t = sample.t
    n = sample.n
    tau = ps.tau_hat
    y = sample.y
    mu1 = or_.mbar1 + np.sum((y[t == 1] - or_.m1_hat[t == 1]) / tau[t == 1]) / n
    mu0 = or_.mbar0 + np.sum((y[t == 0] - or_.m0_hat[t == 0]) / (1.0 - tau[t == 0])) / n
    return float(mu1 - mu0)
