"""
src/report.py
────────────────────────────────────────────────────────────────────────────
Views of an :class:`~src.methods.result.IpdFit`.

    tidy(fit)            one TidyRow per coefficient
    glance(fit)          one GlanceRow per fit
    augment(fit, data)   the dataset plus ``.fitted`` / ``.resid`` columns
    render_print(fit)    abbreviated text (method + estimates)
    render_summary(fit)  fixed-layout coefficient table
    to_json(fit)         {"glance": {...}, "tidy": [...]}

Everything here is a projection: no statistic is recomputed, inputs are
never mutated.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.special import expit

from src.dataset import LABELED, UNLABELED, StackedDataset, design_matrix
from src.errors import UnsupportedOperationError
from src.methods.result import IpdFit

SIG_DIGITS = 6


@dataclass(frozen=True)
class TidyRow:
    term: str
    estimate: float
    std_error: float
    conf_low: float
    conf_high: float


@dataclass(frozen=True)
class GlanceRow:
    method: str
    estimand: str
    n_labeled: int
    n_unlabeled: int
    alpha: float
    n_terms: int
    uses_unlabeled: bool
    intermediate_summary: dict[str, float] = field(default_factory=dict)


def tidy(fit: IpdFit) -> list[TidyRow]:
    return [
        TidyRow(
            term=term,
            estimate=float(fit.estimates[j]),
            std_error=float(fit.std_errors[j]),
            conf_low=float(fit.ci_lower[j]),
            conf_high=float(fit.ci_upper[j]),
        )
        for j, term in enumerate(fit.terms)
    ]


def glance(fit: IpdFit) -> GlanceRow:
    return GlanceRow(
        method=fit.method,
        estimand=fit.estimand,
        n_labeled=fit.n,
        n_unlabeled=fit.N,
        alpha=fit.alpha,
        n_terms=len(fit.terms),
        uses_unlabeled=fit.uses_unlabeled,
        intermediate_summary=_scalar_intermediates(fit.intermediates),
    )


def _scalar_intermediates(values: dict[str, Any]) -> dict[str, float]:
    # vectors (omega_hat, relationship coefficients) are flattened by position
    out: dict[str, float] = {}
    for key, value in values.items():
        if isinstance(value, (list, tuple, np.ndarray)):
            for j, item in enumerate(value):
                out[f"{key}[{j}]"] = float(item)
        else:
            out[key] = float(value)
    return out


def augment(fit: IpdFit, data: StackedDataset) -> StackedDataset:
    """
    Add ``.fitted`` and ``.resid`` on the labeled and unlabeled rows.

    ``.resid`` is missing wherever the observed outcome is; training rows get
    missing values in both columns.
    """
    if fit.estimand not in ("ols", "logistic") or fit.formula is None:
        raise UnsupportedOperationError(
            f"report: augment needs a regression fit, not estimand '{fit.estimand}'."
        )
    frame = data.frame
    mask = data.labels.isin((LABELED, UNLABELED))
    X, _ = design_matrix(frame.loc[mask], fit.formula, "predicted")

    linear = X @ fit.estimates
    fitted = np.full(len(frame), np.nan)
    fitted[mask.to_numpy()] = expit(linear) if fit.estimand == "logistic" else linear

    observed = frame[fit.formula.observed].to_numpy(dtype=np.float64)
    resid = np.where(np.isfinite(observed), observed - fitted, np.nan)

    out = frame.assign(**{".fitted": fitted, ".resid": resid})
    return StackedDataset(out, data.label_column)


# ──────────────────────────────────────────────────────────────────────────
# Text and JSON
# ──────────────────────────────────────────────────────────────────────────
def _g(value: float) -> str:
    return f"{value:.{SIG_DIGITS}g}"


def render_print(fit: IpdFit) -> str:
    lines = [f"IPD fit: method = {fit.method}, estimand = {fit.estimand}", "", "Coefficients:"]
    width = max(len(t) for t in fit.terms)
    lines += [f"  {t:<{width}}  {_g(e)}" for t, e in zip(fit.terms, fit.estimates)]
    return "\n".join(lines) + "\n"


def render_summary(fit: IpdFit) -> str:
    level = _g(100.0 * (1.0 - fit.alpha))
    header = [
        f"Method:   {fit.method}",
        f"Estimand: {fit.estimand}" + (f" (q = {_g(fit.q)})" if fit.q is not None else ""),
    ]
    if fit.formula is not None:
        header.append(f"Formula:  {fit.formula}")
    header += [
        f"Labeled:  n = {fit.n}",
        f"Unlabeled: N = {fit.N}" + ("" if fit.uses_unlabeled else " (not used)"),
        f"Alpha:    {_g(fit.alpha)} ({level}% intervals)",
        "",
    ]

    cols = ("Term", "Estimate", "Std.Error", "Lower", "Upper")
    body = [
        (t, _g(e), _g(s), _g(lo), _g(hi))
        for t, e, s, lo, hi in zip(
            fit.terms, fit.estimates, fit.std_errors, fit.ci_lower, fit.ci_upper
        )
    ]
    widths = [max(len(r[i]) for r in (cols, *body)) for i in range(len(cols))]
    fmt = "  ".join(["{:<%d}" % widths[0]] + ["{:>%d}" % w for w in widths[1:]])
    table = [fmt.format(*cols)] + [fmt.format(*r) for r in body]

    footer: list[str] = []
    scalars = _scalar_intermediates(fit.intermediates)
    if scalars:
        footer = ["", "Intermediates:"] + [f"  {k} = {_g(v)}" for k, v in scalars.items()]
    return "\n".join(header + table + footer) + "\n"


def to_dict(fit: IpdFit) -> dict[str, Any]:
    return {
        "glance": asdict(glance(fit)),
        "tidy": [asdict(row) for row in tidy(fit)],
    }


def to_json(fit: IpdFit, indent: int | None = 2) -> str:
    # repr-based float output round-trips exactly through json.loads
    return json.dumps(to_dict(fit), indent=indent, allow_nan=False)
