"""
result.py
────────────────────────────────────────────────────────────────────────────
`IpdFit` – the glm-style result every method returns: per-term estimates,
standard errors and normal-quantile confidence limits, the sample sizes, and
the method's intermediate quantities (relationship-model coefficients for
PostPI, tuning parameters for PPI++ and PSPA).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from src.config import MethodConfig
from src.dataset import Formula
from src.errors import SingularityError
from src.tools.inference import z_value


@dataclass(frozen=True)
class IpdFit:
    method: str
    estimand: str
    terms: tuple[str, ...]
    estimates: np.ndarray
    std_errors: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    n: int
    N: int  # noqa: N815
    alpha: float
    q: float | None = None
    uses_unlabeled: bool = True
    covariance: np.ndarray | None = None
    intermediates: dict[str, Any] = field(default_factory=dict)
    formula: Formula | None = None

    def coef(self, term: str) -> float:
        return float(self.estimates[self.terms.index(term)])


def term_names(formula: Formula, estimand: str, q: float | None = None) -> tuple[str, ...]:
    """Coefficient names; scalar estimands are called "mean" and "quantile_<q>"."""
    if estimand == "mean":
        return ("mean",)
    if estimand == "quantile":
        return (f"quantile_{q:.2f}",)
    return formula.terms


def build_fit(
    *,
    config: MethodConfig,
    formula: Formula,
    estimates: np.ndarray,
    n: int,
    N: int,  # noqa: N803
    covariance: np.ndarray | None = None,
    std_errors: Sequence[float] | None = None,
    intermediates: dict[str, Any] | None = None,
    uses_unlabeled: bool = True,
) -> IpdFit:
    """Assemble an :class:`IpdFit`; limits are estimate ∓ z_{1−α/2}·se."""
    estimates = np.asarray(estimates, dtype=float).ravel()
    if std_errors is None:
        std_errors = np.sqrt(np.diag(np.atleast_2d(covariance)))
    se = np.asarray(std_errors, dtype=float).ravel()
    if se.shape != estimates.shape:
        raise ValueError("result: estimates and standard errors differ in length.")
    if not np.all(np.isfinite(se)) or np.any(se <= 0.0) or not np.all(np.isfinite(estimates)):
        raise SingularityError(
            f"{config.method}: non-finite estimate or non-positive standard error."
        )

    half = z_value(config.alpha) * se
    return IpdFit(
        method=config.method,
        estimand=config.estimand,
        terms=term_names(formula, config.estimand, config.q),
        estimates=estimates,
        std_errors=se,
        ci_lower=estimates - half,
        ci_upper=estimates + half,
        n=n,
        N=N,
        alpha=config.alpha,
        q=config.q,
        uses_unlabeled=uses_unlabeled,
        covariance=None if covariance is None else np.atleast_2d(covariance),
        intermediates=dict(intermediates or {}),
        formula=formula,
    )
