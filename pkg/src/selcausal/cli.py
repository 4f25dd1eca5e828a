"""Command-line front end.

Commands:
    estimate  ATE point estimates, standard errors and ratio confidence
              intervals on a user CSV.
    simulate  Monte Carlo study cells; writes metric CSV plus a manifest.
    power     Rejection-rate study over a grid of true effects.

Options may come from a config file (``--config``, one ``key = value``
per line, keys matching the long option names); explicit flags win.

Exit codes: 0 success, 2 usage, 3 data validation, 4 numerical failure.
"""

import argparse
import json
import os
import sys
import time
import warnings

from . import kernels
from .baselines import aipw, hajek_ipw, ipw, naive_diff
from .bootstrap import bootstrap_ci, bootstrap_ratios
from .data import ColumnSchema, load_sample, split_groups
from .errors import DataValidationError, PositivityWarning, SelCausalError
from .models import ModelSpec, fit_logistic_ps, fit_ols_outcomes
from .sel1 import Sel1
from .sel2 import Sel2
from . import simulation as sim

ESTIMATE_METHODS = ("naive", "ipw", "hajek", "aipw", "sel1", "sel2")


def _split_list(value):
    return tuple(v.strip() for v in str(value).split(",") if v.strip())


def _read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataValidationError(
                    f"{path} line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _apply_config(args, parser):
    if not getattr(args, "config", None):
        return args
    values = _read_config(args.config)
    for key, raw in values.items():
        if not hasattr(args, key):
            parser.error(f"unknown config key {key!r} in {args.config}")
        if getattr(args, key) is None:   # flag not given explicitly
            setattr(args, key, raw)
    return args


def _fill_defaults(args, defaults):
    for key, val in defaults.items():
        if getattr(args, key) is None:
            setattr(args, key, val)


def _check_alpha(parser, alpha):
    try:
        alpha = float(alpha)
    except (TypeError, ValueError):
        parser.error(f"--alpha must be a number, got {alpha!r}")
    if not 0.0 < alpha < 1.0:
        parser.error(f"--alpha must lie strictly between 0 and 1, got {alpha}")
    return alpha


def build_parser():
    parser = argparse.ArgumentParser(
        prog="selcausal",
        description="Doubly robust ATE estimation and likelihood-ratio "
                    "inference via sample empirical likelihood")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate the ATE on a CSV dataset")
    est.add_argument("--config", default=None)
    est.add_argument("--input", default=None, help="CSV file with a header row")
    est.add_argument("--treatment-col", dest="treatment_col", default=None)
    est.add_argument("--outcome-col", dest="outcome_col", default=None)
    est.add_argument("--covariate-cols", dest="covariate_cols", default=None,
                     help="comma-separated covariate column names")
    est.add_argument("--ps-covariate-cols", dest="ps_covariate_cols", default=None,
                     help="subset used by the propensity model (default: all)")
    est.add_argument("--or-covariate-cols", dest="or_covariate_cols", default=None,
                     help="subset used by the outcome regressions (default: all)")
    est.add_argument("--methods", default=None,
                     help=f"comma-separated subset of {','.join(ESTIMATE_METHODS)}")
    est.add_argument("--alpha", default=None)
    est.add_argument("--bootstrap", default=None,
                     help="bootstrap replicates for calibrated intervals (0 = off)")
    est.add_argument("--seed", default=None)
    est.add_argument("--output", default=None, help="write the JSON report here")

    simp = sub.add_parser("simulate", help="run Monte Carlo study cells")
    simp.add_argument("--config", default=None)
    simp.add_argument("--cells", default=None,
                      help="comma-separated n:t:rho:scenario specs, "
                           "e.g. 400:0.3:0.7:TT")
    simp.add_argument("--full-grid", dest="full_grid", action="store_true")
    simp.add_argument("--n-sim", dest="n_sim", default=None)
    simp.add_argument("--estimators", default=None)
    simp.add_argument("--intervals", default=None)
    simp.add_argument("--alpha", default=None)
    simp.add_argument("--B", dest="b_boot", default=None)
    simp.add_argument("--seed", default=None)
    simp.add_argument("--output-dir", dest="output_dir", default=None)
    simp.add_argument("--jobs", default=None)

    pow_ = sub.add_parser("power", help="rejection-rate study on a theta grid")
    pow_.add_argument("--config", default=None)
    pow_.add_argument("--n", default=None)
    pow_.add_argument("--t", default=None)
    pow_.add_argument("--rho", default=None)
    pow_.add_argument("--scenario", default=None)
    pow_.add_argument("--theta-grid", dest="theta_grid", default=None,
                      help="comma-separated true effects, e.g. 0,1.5,3")
    pow_.add_argument("--n-sim", dest="n_sim", default=None)
    pow_.add_argument("--methods", default=None)
    pow_.add_argument("--alpha", default=None)
    pow_.add_argument("--B", dest="b_boot", default=None)
    pow_.add_argument("--seed", default=None)
    pow_.add_argument("--output-dir", dest="output_dir", default=None)
    pow_.add_argument("--jobs", default=None)
    return parser


# -- estimate ----------------------------------------------------------------

def _estimate_one(name, sample, ps, or_, alpha, b_boot, seed, spec):
    if name == "naive":
        return {"theta_hat": naive_diff(sample)}
    if name == "ipw":
        return {"theta_hat": ipw(sample, ps)}
    if name == "hajek":
        return {"theta_hat": hajek_ipw(sample, ps)}
    if name == "aipw":
        return {"theta_hat": aipw(sample, ps, or_)}
    ctx = (Sel1 if name == "sel1" else Sel2)(sample, ps, or_)
    point = ctx.point
    var = ctx.variance
    ci = ctx.ci_chisq(alpha)
    out = {
        "theta_hat": point.theta_hat,
        "mu1_hat": point.mu1_hat,
        "mu0_hat": point.mu0_hat,
        "se": var.se_theta,
        "delta": var.delta1 if name == "sel1" else var.delta2,
        "ci_chisq": [ci.lower, ci.upper],
        "ci_infeasible_evals": ci.n_infeasible,
    }
    if b_boot:
        run = bootstrap_ratios(sample, spec, name, point.theta_hat,
                               b_boot, seed=seed)
        bci = bootstrap_ci(ctx, run, alpha)
        out["ci_bootstrap"] = [bci.lower, bci.upper]
        out["bootstrap_failed_replicates"] = run.n_failed
    return out


def cmd_estimate(args, parser):
    _fill_defaults(args, {
        "treatment_col": "t", "outcome_col": "y",
        "methods": "naive,ipw,hajek,aipw,sel1,sel2",
        "alpha": 0.05, "bootstrap": 0, "seed": 0,
    })
    if args.input is None:
        parser.error("estimate requires --input")
    if args.covariate_cols is None:
        parser.error("estimate requires --covariate-cols")
    alpha = _check_alpha(parser, args.alpha)
    b_boot = int(args.bootstrap)
    seed = int(args.seed)
    methods = _split_list(args.methods)
    for m in methods:
        if m not in ESTIMATE_METHODS:
            parser.error(f"unknown method {m!r}")

    covs = _split_list(args.covariate_cols)
    schema = ColumnSchema(treatment=args.treatment_col, outcome=args.outcome_col,
                          covariates=covs)
    sample = load_sample(args.input, schema)
    groups = split_groups(sample)

    def subset(raw):
        if raw is None:
            return tuple(range(len(covs)))
        names = _split_list(raw)
        missing = [c for c in names if c not in covs]
        if missing:
            parser.error(f"model covariates {missing} not in --covariate-cols")
        return tuple(covs.index(c) for c in names)

    spec = ModelSpec(ps_covariates=subset(args.ps_covariate_cols),
                     or_covariates=subset(args.or_covariate_cols))

    report = {
        "input": args.input, "n": sample.n, "n1": groups.n1, "n0": groups.n0,
        "alpha": alpha, "bootstrap": b_boot, "backend": kernels.BACKEND,
        "methods": {},
    }
    needs_fits = any(m != "naive" for m in methods)
    ps = or_ = None
    n_positivity = 0
    if needs_fits:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", PositivityWarning)
            ps = fit_logistic_ps(sample, spec)
            or_ = fit_ols_outcomes(sample, groups, spec)
            n_positivity = sum(issubclass(w.category, PositivityWarning)
                               for w in caught)
    for name in methods:
        report["methods"][name] = _estimate_one(
            name, sample, ps, or_, alpha, b_boot, seed, spec)
    report["diagnostics"] = {"positivity_warnings": n_positivity}

    print(f"n={sample.n} (treated {groups.n1}, control {groups.n0})")
    for name in methods:
        res = report["methods"][name]
        line = f"  {name:6s} theta_hat = {res['theta_hat']:+.6f}"
        if "se" in res:
            line += f"  se = {res['se']:.6f}"
        if "ci_chisq" in res:
            lo, hi = res["ci_chisq"]
            line += f"  {100*(1-alpha):.0f}% ratio CI = [{lo:.6f}, {hi:.6f}]"
        if "ci_bootstrap" in res:
            lo, hi = res["ci_bootstrap"]
            line += f"  bootstrap CI = [{lo:.6f}, {hi:.6f}]"
        print(line)
    if n_positivity:
        print(f"  warning: {n_positivity} positivity warning(s) during the "
              "propensity fit")
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"report written to {args.output}")
    return 0


# -- simulate ----------------------------------------------------------------

def _parse_cells(raw, n_sim, seed):
    cells = []
    for token in _split_list(raw):
        parts = token.split(":")
        if len(parts) != 4:
            raise DataValidationError(
                f"cell spec {token!r} must look like n:t:rho:scenario")
        n, t, rho, scenario = parts
        cells.append(sim.ScenarioConfig(
            n=int(n), t=float(t), rho=float(rho), scenario=scenario.upper(),
            n_sim=n_sim, seed=seed))
    return cells


def cmd_simulate(args, parser):
    _fill_defaults(args, {
        "n_sim": 1000, "estimators": "naive,ipw,hajek,aipw,sel1,sel2",
        "intervals": "", "alpha": 0.05, "b_boot": 1000,
        "output_dir": "simulation-output", "jobs": os.cpu_count(),
    })
    if args.seed is None:
        parser.error("simulate requires --seed for reproducibility")
    alpha = _check_alpha(parser, args.alpha)
    n_sim = int(args.n_sim)
    seed = int(args.seed)
    b_boot = int(args.b_boot)
    jobs = int(args.jobs)
    estimators = _split_list(args.estimators)
    intervals = _split_list(args.intervals)
    if args.full_grid:
        cells = sim.full_grid(n_sim=n_sim, seed=seed)
    elif args.cells:
        cells = _parse_cells(args.cells, n_sim, seed)
    else:
        parser.error("simulate requires --cells or --full-grid")

    os.makedirs(args.output_dir, exist_ok=True)
    all_rows = []
    for i, cfg in enumerate(cells, start=1):
        t0 = time.perf_counter()
        all_rows.extend(sim.run_cell(cfg, estimators=estimators,
                                     intervals=intervals, alpha=alpha,
                                     b_boot=b_boot, jobs=jobs))
        print(f"[{i}/{len(cells)}] n={cfg.n} t={cfg.t} rho={cfg.rho} "
              f"{cfg.scenario}: {time.perf_counter() - t0:.1f}s", flush=True)
    csv_path = os.path.join(args.output_dir, "results.csv")
    sim.write_cell_csv(all_rows, csv_path)
    sim.write_manifest(os.path.join(args.output_dir, "manifest.json"),
                       cells, seed, alpha, b_boot,
                       timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"))
    print(f"wrote {csv_path}")
    return 0


# -- power -------------------------------------------------------------------

def cmd_power(args, parser):
    _fill_defaults(args, {
        "n": 400, "t": 0.5, "rho": 0.5, "scenario": "TT",
        "n_sim": 1000, "methods": "selr1,selr2", "alpha": 0.05,
        "b_boot": 1000, "output_dir": "power-output", "jobs": os.cpu_count(),
    })
    if args.seed is None:
        parser.error("power requires --seed for reproducibility")
    if args.theta_grid is None:
        parser.error("power requires --theta-grid")
    alpha = _check_alpha(parser, args.alpha)
    grid = [float(v) for v in _split_list(args.theta_grid)]
    if not grid:
        parser.error("--theta-grid must contain at least one value")
    cfg = sim.ScenarioConfig(
        n=int(args.n), t=float(args.t), rho=float(args.rho),
        scenario=str(args.scenario).upper(), n_sim=int(args.n_sim),
        seed=int(args.seed), theta_true=grid[0], outcome_model="power")
    rows = sim.power_curve(cfg, grid, methods=_split_list(args.methods),
                           alpha=alpha, b_boot=int(args.b_boot),
                           jobs=int(args.jobs))
    os.makedirs(args.output_dir, exist_ok=True)
    csv_path = os.path.join(args.output_dir, "power.csv")
    sim.write_power_csv(rows, csv_path)
    sim.write_manifest(os.path.join(args.output_dir, "manifest.json"),
                       [cfg], int(args.seed), alpha, int(args.b_boot),
                       timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"))
    for r in rows:
        print(f"theta={r.theta_true:g} {r.method}: rejection rate "
              f"{r.rejection_rate:.3f} (dropped {r.n_dropped})")
    print(f"wrote {csv_path}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _apply_config(args, parser)
    try:
        if args.command == "estimate":
            return cmd_estimate(args, parser)
        if args.command == "simulate":
            return cmd_simulate(args, parser)
        if args.command == "power":
            return cmd_power(args, parser)
        parser.error(f"unknown command {args.command!r}")
    except DataValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SelCausalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
