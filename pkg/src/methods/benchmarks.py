"""
benchmarks.py
────────────────────────────────────────────────────────────────────────────
The three reference fits every IPD method is compared against:

  oracle   outcome Y on X over the unlabeled rows (simulation only – needs
           the true Y there)
  naive    prediction f on X over the unlabeled rows, as if f were Y
  classic  outcome Y on X over the labeled rows only

Standard errors follow ``config.benchmark_se``: "model" gives the textbook
lm/glm covariance (σ̂²(XᵀX)⁻¹, inverse observed information, s/√m, and the
binomial-over-density quantile variance); "sandwich" solves the labeled-only
estimating equation and uses its sandwich variance, which is the convention
the PPI++/PSPA reduction identities are stated against.
"""

from __future__ import annotations

import logging
from typing import Literal

import numpy as np

from src.config import MethodConfig
from src.dataset import Formula, Split, design_matrix
from src.errors import DataValidationError
from src.methods.estimating import (
    EstimatingFunction,
    fit_weighted,
    outcome_density,
    single_sample_problem,
)
from src.methods.result import IpdFit, build_fit
from src.tools.inference import sample_quantile
from src.tools.linalg import logistic_solve, ols_solve, sandwich_variance

_LOG = logging.getLogger(__name__)

BenchmarkKind = Literal["oracle", "naive", "classic"]
BENCHMARKS: tuple[str, ...] = ("oracle", "naive", "classic")


def fit_benchmark(kind: str, formula: Formula, split: Split, config: MethodConfig) -> IpdFit:
    """Standard (non-IPD) fit of one benchmark regression."""
    X, y = _benchmark_data(kind, formula, split)
    fn = EstimatingFunction(config.estimand, config.q)

    if config.benchmark_se == "sandwich":
        estimates, cov = fit_weighted(fn, single_sample_problem(X, y), 0.0)
    else:
        estimates, cov = _model_based(fn, X, y)

    _LOG.info("%s fit on %d rows", kind, len(y))
    return build_fit(
        config=config.model_copy(update={"method": kind}),
        formula=formula,
        estimates=estimates,
        covariance=cov,
        n=split.n,
        N=split.N,
        uses_unlabeled=kind != "classic",
        intermediates={"rows_used": len(y)},
    )


def _benchmark_data(kind: str, formula: Formula, split: Split) -> tuple[np.ndarray, np.ndarray]:
    if kind == "classic":
        return design_matrix(split.labeled, formula, "observed")
    if kind == "naive":
        return design_matrix(split.unlabeled, formula, "predicted")
    if kind == "oracle":
        try:
            return design_matrix(split.unlabeled, formula, "observed")
        except DataValidationError as exc:
            raise DataValidationError(
                "oracle: needs the true outcome on every unlabeled row "
                f"(only available for simulated data): {exc}",
                row=exc.row,
            ) from exc
    raise ValueError(f"benchmarks: unknown benchmark '{kind}'.")


def _model_based(fn: EstimatingFunction, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = len(y)
    if fn.estimand == "mean":
        return np.array([y.mean()]), np.array([[y.var(ddof=1) / m]])

    if fn.estimand == "quantile":
        theta = sample_quantile(y, fn.q)
        density = outcome_density(y, theta)
        return np.array([theta]), np.array([[fn.q * (1.0 - fn.q) / (m * density**2)]])

    if fn.estimand == "ols":
        fit = ols_solve(X, y)
        resid = y - X @ fit.coefficients
        sigma2 = float(resid @ resid) / (m - X.shape[1])
        return fit.coefficients, sandwich_variance(fit.hessian, sigma2 * fit.hessian)

    fit = logistic_solve(X, y)
    return fit.coefficients, sandwich_variance(fit.hessian, fit.hessian)
