"""Doubly robust ATE estimation and likelihood-ratio inference via
sample empirical likelihood with propensity-score constraints."""

from .baselines import aipw, hajek_ipw, ipw, naive_diff
from .bootstrap import BootstrapRun, bootstrap_ci, bootstrap_quantile, bootstrap_ratios
from .data import (ColumnSchema, GroupIndex, ObservedSample, PotentialSample,
                   load_sample, save_sample, split_groups)
from .elsolver import ELSolution, check_hull, log_el_at, solve_dual
from .errors import (CIRootError, DataValidationError, HullViolationError,
                     ModelFitError, NonConvergenceError, PositivityWarning,
                     SelCausalError)
from .models import ModelSpec, OrFit, PsFit, fit_logistic_ps, fit_ols_outcomes
from .ratio_ci import IntervalResult, invert_ratio
from .sel1 import Sel1, Sel1Point, Sel1Variance
from .sel2 import PhiSolution, Sel2, Sel2Point, Sel2Variance
from .simulation import (CellResult, PowerResult, ScenarioConfig,
                         calibrate_alpha0, calibrate_noise, full_grid,
                         generate_sample, power_curve, run_cell, scenario_spec)

__version__ = "0.1.0"

__all__ = [
    "aipw", "hajek_ipw", "ipw", "naive_diff",
    "BootstrapRun", "bootstrap_ci", "bootstrap_quantile", "bootstrap_ratios",
    "ColumnSchema", "GroupIndex", "ObservedSample", "PotentialSample",
    "load_sample", "save_sample", "split_groups",
    "ELSolution", "check_hull", "log_el_at", "solve_dual",
    "CIRootError", "DataValidationError", "HullViolationError",
    "ModelFitError", "NonConvergenceError", "PositivityWarning", "SelCausalError",
    "ModelSpec", "OrFit", "PsFit", "fit_logistic_ps", "fit_ols_outcomes",
    "IntervalResult", "invert_ratio",
    "Sel1", "Sel1Point", "Sel1Variance",
    "PhiSolution", "Sel2", "Sel2Point", "Sel2Variance",
    "CellResult", "PowerResult", "ScenarioConfig",
    "calibrate_alpha0", "calibrate_noise", "full_grid", "generate_sample",
    "power_curve", "run_cell", "scenario_spec",
]
