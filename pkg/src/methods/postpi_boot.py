"""
postpi_boot.py
────────────────────────────────────────────────────────────────────────────
PostPI with bootstrap correction (pseudo-outcome strategy).

1. Fit a *relationship model* of Y on the downstream design X and f over
   the labeled rows: OLS with Gaussian noise at the residual SD for
   continuous outcomes, logistic regression with Bernoulli draws for binary
   ones.  Because X spans part of the relationship design, regressing the
   linear predictor back on X recovers the projection of Y on X even when
   f is miscalibrated.
2. For b = 1 … nboot: refit the relationship model on a resample of the
   labeled rows (unless ``postpi_resample_labeled`` is off), resample the N
   unlabeled rows with replacement, simulate pseudo-outcomes from the
   relationship model, and fit the downstream model of the pseudo-outcome
   on X.
3. Point estimate = coordinate-wise median of the bootstrap coefficients;
   SE = their standard deviation ("npar") or the median of the per-replicate
   model-based SEs ("par").

Replicate b draws only from the streams (seed, b, ·), so results do not
depend on evaluation order.  Failed replicates are skipped; more than 10 %
failures abort the fit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from src.config import MethodConfig
from src.dataset import Formula, Split
from src.errors import (
    DataError,
    DegeneratePredictionsError,
    NumericalError,
    ReplicateFailureError,
    UnsupportedCombinationError,
)
from src.methods.estimating import IpdProblem
from src.methods.result import IpdFit, build_fit
from src.tools.linalg import GlmFit, logistic_solve, ols_solve, sandwich_variance
from src.tools.rng import RngStream, resample_indices

_LOG = logging.getLogger(__name__)

SUPPORTED_ESTIMANDS = frozenset({"ols", "logistic"})
MAX_FAILURE_SHARE = 0.10


@dataclass(frozen=True)
class Relationship:
    """Y ≈ X·gamma_x + gamma_f·f, with residual SD ``sigma`` (0 when binary)."""

    gamma_x: np.ndarray
    gamma_f: float
    sigma: float

    def linear_predictor(self, X: np.ndarray, f: np.ndarray) -> np.ndarray:
        return X @ self.gamma_x + self.gamma_f * f

    @property
    def coefficients(self) -> list[float]:
        return [float(g) for g in self.gamma_x] + [float(self.gamma_f)]


def fit_postpi_boot(formula: Formula, split: Split, config: MethodConfig) -> IpdFit:
    if config.estimand not in SUPPORTED_ESTIMANDS:
        raise UnsupportedCombinationError(
            f"postpi_boot: estimand '{config.estimand}' is not supported "
            f"(supported: {', '.join(sorted(SUPPORTED_ESTIMANDS))})."
        )
    problem = IpdProblem.from_split(formula, split)
    binary = config.estimand == "logistic"
    if np.ptp(problem.f_l) == 0.0:
        raise DegeneratePredictionsError(
            "postpi_boot: predictions are constant on the labeled rows; "
            "the relationship model of Y on f is not identified."
        )
    relationship = _fit_relationship(problem.X_l, problem.f_l, problem.y_l, binary)

    root = RngStream(config.seed)
    coefs: list[np.ndarray] = []
    ses: list[np.ndarray] = []
    failures = 0
    for b in range(config.nboot):
        try:
            coef, se = _replicate(problem, relationship, binary, root.child(b), config)
        except (NumericalError, DataError) as exc:
            failures += 1
            _LOG.warning("postpi_boot: replicate %d skipped (%s)", b, exc)
            continue
        coefs.append(coef)
        ses.append(se)

    if failures > MAX_FAILURE_SHARE * config.nboot or len(coefs) < 2:
        raise ReplicateFailureError(
            f"postpi_boot: {failures} of {config.nboot} bootstrap replicates failed."
        )

    boot = np.vstack(coefs)
    estimates = np.median(boot, axis=0)
    if config.postpi_se == "par":
        std_errors = np.median(np.vstack(ses), axis=0)
    else:
        std_errors = boot.std(axis=0, ddof=1)

    _LOG.info("postpi_boot/%s done: %d replicates, %d failed", config.estimand, len(coefs), failures)
    return build_fit(
        config=config,
        formula=formula,
        estimates=estimates,
        std_errors=std_errors,
        n=problem.n,
        N=problem.N,
        intermediates={
            "relationship_coefficients": relationship.coefficients,
            "relationship_sigma": relationship.sigma,
            "nboot": config.nboot,
            "failed_replicates": failures,
        },
    )


def _fit_relationship(X: np.ndarray, f: np.ndarray, y: np.ndarray, binary: bool) -> Relationship:
    """Regress Y on ``[X, f]``; the last coefficient belongs to f."""
    Z = np.column_stack([X, f])
    try:
        if binary:
            gamma = logistic_solve(Z, y).coefficients
            return Relationship(gamma[:-1], float(gamma[-1]), 0.0)
        fit = ols_solve(Z, y)
    except (NumericalError, DataError) as exc:
        raise DegeneratePredictionsError(
            f"postpi_boot: cannot fit the relationship model of Y on f ({exc})."
        ) from exc
    gamma = fit.coefficients
    resid = y - Z @ gamma
    sigma = float(np.sqrt(resid @ resid / (len(y) - Z.shape[1])))
    return Relationship(gamma[:-1], float(gamma[-1]), sigma)


def _replicate(
    problem: IpdProblem,
    relationship: Relationship,
    binary: bool,
    stream: RngStream,
    config: MethodConfig,
) -> tuple[np.ndarray, np.ndarray]:
    if config.postpi_resample_labeled:
        idx_l = resample_indices(problem.n, stream.child(2))
        relationship = _fit_relationship(
            problem.X_l[idx_l], problem.f_l[idx_l], problem.y_l[idx_l], binary
        )

    idx = resample_indices(problem.N, stream.child(0))
    X_b = problem.X_u[idx]
    mu = relationship.linear_predictor(X_b, problem.f_u[idx])
    noise = stream.child(1).generator()

    if binary:
        pseudo = (noise.random(problem.N) < expit(mu)).astype(float)
        fit = logistic_solve(X_b, pseudo)
        return fit.coefficients, _se(sandwich_variance(fit.hessian, fit.hessian))

    pseudo = mu + relationship.sigma * noise.standard_normal(problem.N)
    fit = ols_solve(X_b, pseudo)
    return fit.coefficients, _se(_ols_covariance(fit, X_b, pseudo))


def _ols_covariance(fit: GlmFit, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    resid = y - X @ fit.coefficients
    sigma2 = float(resid @ resid) / (X.shape[0] - X.shape[1])
    return sandwich_variance(fit.hessian, sigma2 * fit.hessian)


def _se(cov: np.ndarray) -> np.ndarray:
    return np.sqrt(np.diag(cov))
