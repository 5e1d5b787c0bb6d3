"""Dataset container, CSV ingestion and overlap diagnostics."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ParseError, SchemaError, ValidationError


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """N units with covariates, a binary treatment flag and a real outcome.

    Arrays are copied and made read-only on construction.
    """

    unit_ids: np.ndarray
    covariates: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray
    feature_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.covariates, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValidationError("covariates must be a 2-D matrix")
        n = X.shape[0]
        t_raw = np.asarray(self.treatment)
        y = np.asarray(self.outcome, dtype=np.float64)
        ids = np.arange(n) if self.unit_ids is None else np.asarray(self.unit_ids)
        if not (len(t_raw) == len(y) == len(ids) == n):
            raise ValidationError(
                f"length mismatch: covariates {n}, treatment {len(t_raw)}, "
                f"outcome {len(y)}, unit_ids {len(ids)}"
            )
        if n < 2:
            raise ValidationError("a dataset needs at least 2 units")
        if not np.all(np.isin(t_raw, (0, 1))):
            raise ValidationError("treatment values must be 0 or 1")
        t = t_raw.astype(np.int64)
        if t.sum() == 0:
            raise ValidationError("treated arm is empty")
        if t.sum() == n:
            raise ValidationError("control arm is empty")
        if not np.all(np.isfinite(X)):
            raise ValidationError("covariates contain non-finite values")
        if not np.all(np.isfinite(y)):
            raise ValidationError("outcome contains non-finite values")
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValidationError(f"{len(names)} feature names for {X.shape[1]} covariates")
        object.__setattr__(self, "covariates", _frozen(X, np.float64))
        object.__setattr__(self, "treatment", _frozen(t, np.int64))
        object.__setattr__(self, "outcome", _frozen(y, np.float64))
        object.__setattr__(self, "unit_ids", _frozen(ids, np.int64))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def d(self) -> int:
        return self.covariates.shape[1]

    @property
    def n_treated(self) -> int:
        return int(self.treatment.sum())

    @property
    def n_control(self) -> int:
        return self.n - self.n_treated

    def take(self, rows) -> "Dataset":
        """Subset of units (boolean mask or index array), order preserved."""
        rows = np.asarray(rows)
        return Dataset(
            unit_ids=self.unit_ids[rows],
            covariates=self.covariates[rows],
            treatment=self.treatment[rows],
            outcome=self.outcome[rows],
            feature_names=self.feature_names,
        )

    def equals(self, other: "Dataset") -> bool:
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.unit_ids, other.unit_ids)
            and np.array_equal(self.covariates, other.covariates)
            and np.array_equal(self.treatment, other.treatment)
            and np.array_equal(self.outcome, other.outcome)
        )


@dataclass(frozen=True)
class OverlapReport:
    min_propensity: float
    max_propensity: float
    n_below_lo: int
    n_above_hi: int
    violated: bool

    def to_dict(self) -> dict:
        return {
            "min_propensity": self.min_propensity,
            "max_propensity": self.max_propensity,
            "n_below_lo": self.n_below_lo,
            "n_above_hi": self.n_above_hi,
            "violated": self.violated,
        }


DEFAULT_SCHEMA = {"id": "unit_id", "treatment": "treatment", "outcome": "outcome"}


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"column {column!r}: cannot parse {cell!r} as a number", row=row) from None


def load_csv(path, schema: Mapping | None = None) -> Dataset:
    """Read a dataset from a header-row CSV file.

    ``schema`` maps roles to column names: ``treatment`` and ``outcome`` are
    required, ``id`` is optional (0-based ids are generated when it is absent
    from the file) and ``covariates`` defaults to every remaining column in
    file order. Row indices in parse errors count data rows from 0.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    index = {name: j for j, name in enumerate(header)}
    for role in ("treatment", "outcome"):
        if schema[role] not in index:
            raise SchemaError(f"{role} column {schema[role]!r} not found in {path}")
    id_col = schema.get("id")
    has_id = id_col is not None and id_col in index
    covariates = schema.get("covariates")
    if covariates is None:
        used = {schema["treatment"], schema["outcome"]} | ({id_col} if has_id else set())
        covariates = [h for h in header if h not in used]
    for name in covariates:
        if name not in index:
            raise SchemaError(f"covariate column {name!r} not found in {path}")
    if not covariates:
        raise SchemaError(f"{path}: no covariate columns")

    n = len(rows)
    X = np.empty((n, len(covariates)))
    t = np.empty(n, dtype=np.int64)
    y = np.empty(n)
    ids = np.arange(n, dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", row=i)
        for j, name in enumerate(covariates):
            X[i, j] = _parse_float(row[index[name]], i, name)
        y[i] = _parse_float(row[index[schema["outcome"]]], i, schema["outcome"])
        tv = _parse_float(row[index[schema["treatment"]]], i, schema["treatment"])
        if tv not in (0.0, 1.0):
            raise ParseError(f"treatment value {row[index[schema['treatment']]]!r} is not 0 or 1", row=i)
        t[i] = int(tv)
        if has_id:
            cell = row[index[id_col]]
            try:
                ids[i] = int(cell)
            except ValueError:
                raise ParseError(f"unit id {cell!r} is not an integer", row=i) from None
    return Dataset(unit_ids=ids, covariates=X, treatment=t, outcome=y, feature_names=tuple(covariates))


def save_csv(ds: Dataset, path, schema: Mapping | None = None) -> None:
    """Write ``ds`` in canonical form: id, covariates, treatment, outcome.

    Floats use the shortest repr that round-trips, so loading and saving a
    canonical file reproduces it byte for byte.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([schema["id"], *ds.feature_names, schema["treatment"], schema["outcome"]])
        for i in range(ds.n):
            w.writerow(
                [int(ds.unit_ids[i])]
                + [repr(float(v)) for v in ds.covariates[i]]
                + [int(ds.treatment[i]), repr(float(ds.outcome[i]))]
            )


def _check_propensity(ds: Dataset, propensity, lo: float, hi: float) -> np.ndarray:
    p = np.asarray(propensity, dtype=np.float64)
    if p.shape != (ds.n,):
        raise ValidationError(f"propensity has length {p.size}, dataset has {ds.n} units")
    if not 0.0 <= lo < hi <= 1.0:
        raise ValidationError(f"need 0 <= lo < hi <= 1, got lo={lo}, hi={hi}")
    return p


def overlap_report(ds: Dataset, propensity: Sequence[float], lo: float = 0.05, hi: float = 0.95) -> OverlapReport:
    """Count units whose assignment propensity falls outside ``[lo, hi]``."""
    p = _check_propensity(ds, propensity, lo, hi)
    below = int(np.count_nonzero(p < lo))
    above = int(np.count_nonzero(p > hi))
    return OverlapReport(
        min_propensity=float(p.min()),
        max_propensity=float(p.max()),
        n_below_lo=below,
        n_above_hi=above,
        violated=below + above > 0,
    )


def positivity_trim(ds: Dataset, propensity: Sequence[float], lo: float = 0.05, hi: float = 0.95) -> Dataset:
    """Keep the units with ``lo <= propensity <= hi`` (closed interval)."""
    p = _check_propensity(ds, propensity, lo, hi)
    keep = (p >= lo) & (p <= hi)
    t = ds.treatment[keep]
    if not np.any(t == 1):
        raise ValidationError("treated arm is empty after positivity trimming")
    if not np.any(t == 0):
        raise ValidationError("control arm is empty after positivity trimming")
    return ds.take(keep)
