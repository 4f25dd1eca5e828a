"""Observational-sample data model, validation and CSV ingestion."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError


@dataclass(frozen=True)
class ObservedSample:
    """One observational study: covariates, treatment flags, observed outcomes.

    x is n x p, t is a 0/1 vector of length n, y is the observed outcome
    (the treated potential outcome where t=1, the control one where t=0).
    Arrays are validated and made read-only on construction so samples can
    be shared freely across workers.
    """

    x: np.ndarray
    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        t = np.asarray(self.t, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape[0] != t.shape[0] or t.shape[0] != y.shape[0]:
            raise DataValidationError(
                f"length mismatch: x has {x.shape[0]} rows, "
                f"t has {t.shape[0]}, y has {y.shape[0]}")
        if x.shape[0] < 2:
            raise DataValidationError("need at least 2 units")
        if not np.all(np.isfinite(x)):
            rows = np.unique(np.nonzero(~np.isfinite(x))[0])
            raise DataValidationError(
                f"non-finite covariate value in row(s) {rows.tolist()}")
        if not np.all(np.isfinite(y)):
            rows = np.nonzero(~np.isfinite(y))[0]
            raise DataValidationError(
                f"non-finite outcome value in row(s) {rows.tolist()}")
        bad = ~((t == 0.0) | (t == 1.0))
        if np.any(bad):
            rows = np.nonzero(bad)[0]
            raise DataValidationError(
                f"treatment must be 0 or 1; offending row(s) {rows.tolist()}")
        ti = t.astype(np.int64)
        if ti.sum() == 0:
            raise DataValidationError("treatment group empty")
        if ti.sum() == len(ti):
            raise DataValidationError("control group empty")
        for arr in (x, ti, y):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", ti)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]


@dataclass(frozen=True)
class GroupIndex:
    """Index partition of a sample into treated (s1) and control (s0) units."""

    s1: np.ndarray
    s0: np.ndarray

    @property
    def n1(self):
        return self.s1.shape[0]

    @property
    def n0(self):
        return self.s0.shape[0]


@dataclass(frozen=True)
class PotentialSample:
    """Both potential outcomes and true propensity scores (simulation only)."""

    y1: np.ndarray
    y0: np.ndarray
    tau0: np.ndarray

    def __post_init__(self):
        tau0 = np.asarray(self.tau0, dtype=float)
        if np.any(tau0 <= 0.0) or np.any(tau0 >= 1.0):
            raise DataValidationError("true propensity scores must lie strictly in (0, 1)")


@dataclass(frozen=True)
class ColumnSchema:
    """Name-based CSV column mapping (header row is mandatory)."""

    treatment: str = "t"
    outcome: str = "y"
    covariates: tuple = ("x1",)

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if len(self.covariates) == 0:
            raise DataValidationError("at least one covariate column is required")


def split_groups(sample: ObservedSample) -> GroupIndex:
    """Partition unit indices by treatment arm."""
    idx = np.arange(sample.n)
    return GroupIndex(s1=idx[sample.t == 1], s0=idx[sample.t == 0])


def load_sample(path, schema: ColumnSchema) -> ObservedSample:
    """Read and validate an observational sample from a CSV file.

    The treatment cell must be exactly the string "0" or "1" (no numeric
    coercion); covariate and outcome cells must parse to finite floats.
    Errors cite the offending 1-based data row.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataValidationError(f"{path}: empty file or missing header")
        header = set(reader.fieldnames)
        needed = [schema.treatment, schema.outcome, *schema.covariates]
        missing = [c for c in needed if c not in header]
        if missing:
            raise DataValidationError(f"{path}: missing column(s) {missing}")
        t_raw, y_raw, x_raw = [], [], []
        for i, row in enumerate(reader, start=1):
            tv = (row[schema.treatment] or "").strip()
            if tv not in ("0", "1"):
                raise DataValidationError(
                    f"{path} row {i}: treatment must be '0' or '1', got {tv!r}")
            t_raw.append(int(tv))
            yv = _parse_float(row[schema.outcome], path, i, schema.outcome)
            y_raw.append(yv)
            x_raw.append([_parse_float(row[c], path, i, c) for c in schema.covariates])
    if not t_raw:
        raise DataValidationError(f"{path}: no data rows")
    return ObservedSample(x=np.array(x_raw, dtype=float),
                          t=np.array(t_raw, dtype=float),
                          y=np.array(y_raw, dtype=float))


def _parse_float(cell, path, row, col):
    try:
        v = float(cell)
    except (TypeError, ValueError):
        raise DataValidationError(
            f"{path} row {row}: column {col!r} is not numeric: {cell!r}") from None
    if not math.isfinite(v):
        raise DataValidationError(
            f"{path} row {row}: column {col!r} is not finite: {cell!r}")
    return v


def save_sample(sample: ObservedSample, path, schema: ColumnSchema) -> None:
    """Write a sample back to CSV in a form load_sample accepts unchanged."""
    if len(schema.covariates) != sample.p:
        raise DataValidationError(
            f"schema names {len(schema.covariates)} covariates, sample has {sample.p}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([schema.treatment, schema.outcome, *schema.covariates])
        for j in range(sample.n):
            writer.writerow([str(int(sample.t[j])), repr(float(sample.y[j])),
                             *[repr(float(v)) for v in sample.x[j]]])
