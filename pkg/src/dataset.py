"""
src/dataset.py
════════════════════════════════════════════════════════════════════════════
Formula interface and stacked-data ingestion.

A stacked dataset holds every row of 𝒟 = 𝓛 ∪ 𝓤 (plus, optionally, the rows
the prediction model was trained on) in one table with a label column whose
values are exactly ``"training"``, ``"labeled"`` or ``"unlabeled"``.  The
formula ``Y - f ~ X1 + X2`` names the observed outcome, the predicted outcome
and the covariates.

Public API
──────────
    parse_formula(text)                      → Formula
    render_formula(formula)                  → str
    load_stacked(source, label_column, f)    → StackedDataset
    from_frame(df, label_column, f)          → StackedDataset
    from_frames(labeled, unlabeled, f)       → StackedDataset
    load_split_csv(labeled, unlabeled, f)    → StackedDataset
    write_csv(data, target)                  → None
    split(data)                              → Split
    design_matrix(rows, f, outcome)          → (X, y)

Datasets are never mutated after construction; every helper here returns new
objects.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Literal, Union

import numpy as np
import pandas as pd

from src.errors import (
    DataParseError,
    DataValidationError,
    FormulaParseError,
    SchemaError,
)

_LOG = logging.getLogger(__name__)

TRAINING, LABELED, UNLABELED = "training", "labeled", "unlabeled"
LABELS: tuple[str, ...] = (TRAINING, LABELED, UNLABELED)
MISSING_TOKENS: frozenset[str] = frozenset({"NA", ""})
FLOAT_FORMAT = "%.17g"

REGRESSION_ESTIMANDS = frozenset({"ols", "logistic"})
SCALAR_ESTIMANDS = frozenset({"mean", "quantile"})

Source = Union[str, Path, IO[str]]


# ──────────────────────────────────────────────────────────────────────────
# Formula
# ──────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class Formula:
    """Parsed ``observed - predicted ~ covariates`` triple."""

    observed: str
    predicted: str
    covariates: tuple[str, ...] = ()
    intercept: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if self.observed == self.predicted:
            raise DataValidationError(
                f"formula: observed and predicted outcome are both '{self.observed}'."
            )
        seen: set[str] = set()
        for name in self.covariates:
            if name in (self.observed, self.predicted):
                raise DataValidationError(
                    f"formula: covariate '{name}' repeats an outcome column."
                )
            if name in seen:
                raise DataValidationError(f"formula: duplicate covariate '{name}'.")
            seen.add(name)

    @property
    def columns(self) -> tuple[str, ...]:
        """Every data column the formula refers to."""
        return (self.observed, self.predicted, *self.covariates)

    @property
    def terms(self) -> tuple[str, ...]:
        return ("(Intercept)", *self.covariates)

    def check_estimand(self, estimand: str) -> None:
        """Covariates are required for regressions and forbidden otherwise."""
        if estimand in REGRESSION_ESTIMANDS and not self.covariates:
            raise DataValidationError(
                f"formula: estimand '{estimand}' needs at least one covariate."
            )
        if estimand in SCALAR_ESTIMANDS and self.covariates:
            raise DataValidationError(
                f"formula: estimand '{estimand}' takes no covariates; use '~ 1'."
            )

    def __str__(self) -> str:
        return render_formula(self)


_NAME = r"[A-Za-z_.][A-Za-z0-9_.]*"
_NAME_RE = re.compile(rf"^{_NAME}$")
_LHS_RE = re.compile(rf"^({_NAME})-({_NAME})$")
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?", re.ASCII)


def parse_formula(text: str) -> Formula:
    """
    Parse ``Y - f ~ X1 + X2`` (``=`` is accepted in place of ``~``).

    Whitespace is ignored; ``~ 1`` or an empty right-hand side yields a
    formula without covariates.
    """
    if not text or not text.strip():
        raise FormulaParseError("formula: empty formula text.")
    compact = re.sub(r"\s+", "", text)

    parts = re.split(r"[~=]", compact)
    if len(parts) != 2:
        raise FormulaParseError(
            f"formula: expected exactly one '~' (or '=') in {text!r}; "
            "the shape is 'Y - f ~ X1 + X2'."
        )
    lhs, rhs = parts

    m = _LHS_RE.match(lhs)
    if not m:
        raise FormulaParseError(
            f"formula: left-hand side {lhs!r} must read 'observed - predicted', "
            "as in 'Y - f ~ X1 + X2'."
        )

    covariates: list[str] = []
    if rhs not in ("", "1"):
        for token in rhs.split("+"):
            if token == "1":
                continue  # explicit intercept
            if not _NAME_RE.match(token):
                raise FormulaParseError(
                    f"formula: unsupported right-hand-side term {token!r}; "
                    "precompute transformed columns."
                )
            covariates.append(token)

    return Formula(observed=m.group(1), predicted=m.group(2), covariates=tuple(covariates))


def render_formula(formula: Formula) -> str:
    """Canonical display form; ``parse_formula(render_formula(F)) == F``."""
    rhs = " + ".join(formula.covariates) if formula.covariates else "1"
    return f"{formula.observed} - {formula.predicted} ~ {rhs}"


# ──────────────────────────────────────────────────────────────────────────
# Stacked data
# ──────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class StackedDataset:
    """
    All rows of the analysis in one table.

    Every column except ``label_column`` is float64; missing values are NaN.
    Treat ``frame`` as read-only.
    """

    frame: pd.DataFrame
    label_column: str

    @property
    def columns(self) -> list[str]:
        return list(self.frame.columns)

    @property
    def rows(self) -> int:
        return len(self.frame)

    @property
    def labels(self) -> pd.Series:
        return self.frame[self.label_column]

    def label_counts(self) -> dict[str, int]:
        counts = self.labels.value_counts()
        return {label: int(counts.get(label, 0)) for label in LABELS}

    def validate(self, formula: Formula) -> "StackedDataset":
        """Check the schema and row invariants against ``formula``; returns self."""
        missing = [c for c in (self.label_column, *formula.columns) if c not in self.frame.columns]
        if missing:
            raise SchemaError(missing)

        labels = self.labels
        bad = ~labels.isin(LABELS)
        if bad.any():
            row = _first_row(bad)
            raise DataValidationError(
                f"dataset: label {labels.loc[row]!r} at row {row} is not one of "
                f"{', '.join(LABELS)}.",
                row=row,
            )

        is_labeled = labels == LABELED
        is_inference = labels.isin((LABELED, UNLABELED))

        y_bad = is_labeled & ~np.isfinite(self.frame[formula.observed])
        if y_bad.any():
            row = _first_row(y_bad)
            raise DataValidationError(
                f"dataset: labeled row {row} has a missing or non-finite "
                f"'{formula.observed}'.",
                row=row,
            )

        f_bad = is_inference & ~np.isfinite(self.frame[formula.predicted])
        if f_bad.any():
            row = _first_row(f_bad)
            raise DataValidationError(
                f"dataset: row {row} has a missing or non-finite prediction "
                f"'{formula.predicted}'.",
                row=row,
            )
        return self


def _first_row(mask: pd.Series) -> int:
    return int(mask[mask].index[0])


def _parse_numeric(series: pd.Series, name: str) -> pd.Series:
    """Token-wise float parsing; "NA" and "" become NaN, text must be a plain decimal."""
    values = np.empty(len(series), dtype=np.float64)
    for i, token in enumerate(series.to_numpy()):
        if token in MISSING_TOKENS:
            values[i] = np.nan
            continue
        try:
            if isinstance(token, str) and not _NUMBER_RE.fullmatch(token):
                raise ValueError(token)
            values[i] = float(token)
        except (TypeError, ValueError):
            raise DataParseError(
                f"dataset: non-numeric value {token!r} in column '{name}' at row {i}.",
                row=i,
            ) from None
    return pd.Series(values, index=series.index, name=name)


def _coerce(frame: pd.DataFrame, label_column: str) -> pd.DataFrame:
    out = {}
    for name in frame.columns:
        col = frame[name]
        if name == label_column:
            out[name] = col.astype(str)
        elif pd.api.types.is_numeric_dtype(col) and not pd.api.types.is_bool_dtype(col):
            out[name] = col.astype(np.float64)
        else:
            out[name] = _parse_numeric(col.astype(object), name)
    return pd.DataFrame(out, index=pd.RangeIndex(len(frame)))


def from_frame(
    frame: pd.DataFrame,
    label_column: str,
    formula: Formula | None = None,
) -> StackedDataset:
    """Wrap an in-memory table; validates against ``formula`` when given."""
    if label_column not in frame.columns:
        raise SchemaError([label_column])
    data = StackedDataset(_coerce(frame, label_column), label_column)
    return data.validate(formula) if formula is not None else data


def load_stacked(source: Source, label_column: str, formula: Formula) -> StackedDataset:
    """
    Read a comma-delimited file with a header row.

    Everything is read as text first so that float parsing is exact and the
    offending row can be named on failure.
    """
    try:
        raw = pd.read_csv(
            source,
            sep=",",
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as exc:
        raise DataParseError("dataset: input has no header row.") from exc

    missing = [c for c in (label_column, *formula.columns) if c not in raw.columns]
    if missing:
        raise SchemaError(missing)

    data = from_frame(raw, label_column, formula)
    _LOG.info("Loaded %d rows; label counts %s", data.rows, data.label_counts())
    return data


def from_frames(
    labeled: pd.DataFrame,
    unlabeled: pd.DataFrame,
    formula: Formula,
    label_column: str = "set",
) -> StackedDataset:
    """Stack separately supplied labeled and unlabeled tables."""
    if label_column in labeled.columns or label_column in unlabeled.columns:
        raise DataValidationError(
            f"dataset: separate inputs must not already carry a '{label_column}' column."
        )
    missing = [c for c in formula.columns if c not in labeled.columns]
    missing += [c for c in (formula.predicted, *formula.covariates) if c not in unlabeled.columns]
    if missing:
        raise SchemaError(sorted(set(missing)))
    unlabeled = unlabeled.copy()
    if formula.observed not in unlabeled.columns:
        unlabeled[formula.observed] = np.nan
    stacked = pd.concat(
        [labeled.assign(**{label_column: LABELED}), unlabeled.assign(**{label_column: UNLABELED})],
        ignore_index=True,
        sort=False,
    )
    return from_frame(stacked, label_column, formula)


def write_csv(data: StackedDataset, target: Source) -> None:
    """Write with 17 significant digits and "NA" for missing values."""
    data.frame.to_csv(
        target,
        index=False,
        float_format=FLOAT_FORMAT,
        na_rep="NA",
        lineterminator="\n",
    )


# ──────────────────────────────────────────────────────────────────────────
# Splitting and design matrices
# ──────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class Split:
    """Labeled (𝓛, size n) and unlabeled (𝓤, size N) rows; training rows dropped."""

    labeled: pd.DataFrame
    unlabeled: pd.DataFrame

    @property
    def n(self) -> int:
        return len(self.labeled)

    @property
    def N(self) -> int:  # noqa: N802
        return len(self.unlabeled)


def split(data: StackedDataset) -> Split:
    labels = data.labels
    result = Split(
        labeled=data.frame.loc[labels == LABELED],
        unlabeled=data.frame.loc[labels == UNLABELED],
    )
    if result.n == 0 or result.N == 0:
        raise DataValidationError(
            f"dataset: need both labeled and unlabeled rows (n={result.n}, N={result.N})."
        )
    _LOG.debug("split: n=%d N=%d (training rows dropped)", result.n, result.N)
    return result


def design_matrix(
    rows: pd.DataFrame,
    formula: Formula,
    outcome: Literal["observed", "predicted"],
) -> tuple[np.ndarray, np.ndarray]:
    """``[1, X1, …, Xp]`` and the chosen outcome vector, row order preserved."""
    column = {"observed": formula.observed, "predicted": formula.predicted}[outcome]
    y = rows[column].to_numpy(dtype=np.float64)
    _require_finite(y, rows.index, f"outcome '{column}'")

    pieces: list[np.ndarray] = [np.ones(len(rows))]
    for name in formula.covariates:
        x = rows[name].to_numpy(dtype=np.float64)
        _require_finite(x, rows.index, f"covariate '{name}'")
        pieces.append(x)
    return np.column_stack(pieces), y


def _require_finite(values: np.ndarray, index: Iterable, what: str) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        row = list(index)[int(np.argmax(bad))]
        raise DataValidationError(f"dataset: {what} is missing or non-finite at row {row}.", row=row)


def load_split_csv(
    labeled: Source,
    unlabeled: Source,
    formula: Formula,
    label_column: str = "set",
) -> StackedDataset:
    """Read separate labeled and unlabeled files and stack them."""
    frames = []
    for source in (labeled, unlabeled):
        try:
            frames.append(pd.read_csv(source, sep=",", dtype=str, na_filter=False, encoding="utf-8"))
        except pd.errors.EmptyDataError as exc:
            raise DataParseError("dataset: input has no header row.") from exc
    data = from_frames(frames[0], frames[1], formula, label_column)
    _LOG.info("Stacked %d rows from separate inputs; label counts %s", data.rows, data.label_counts())
    return data
