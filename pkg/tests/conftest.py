import numpy as np
import pytest

from selcausal import simulation as sim
from selcausal.data import split_groups
from selcausal.models import fit_logistic_ps, fit_ols_outcomes


def make_tt(n=400, t=0.5, rho=0.5, seed=0, rep=0):
    """One TT replicate with correctly specified working-model fits."""
    cfg = sim.ScenarioConfig(n=n, t=t, rho=rho, scenario="TT", n_sim=1, seed=seed)
    sample, pot = sim.generate_sample(cfg, rep)
    spec = sim.scenario_spec("TT")
    ps = fit_logistic_ps(sample, spec)
    or_ = fit_ols_outcomes(sample, split_groups(sample), spec)
    return sample, pot, ps, or_


@pytest.fixture(scope="session")
def tt400():
    return make_tt(n=400, seed=0)


@pytest.fixture(scope="session")
def tt100():
    return make_tt(n=100, t=0.3, rho=0.3, seed=5)
