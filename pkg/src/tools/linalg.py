# src/tools/linalg.py
# ────────────────────────────────────────────────────────────────────────────
# Deterministic solvers shared by every method: least squares through a QR
# decomposition, Newton-Raphson logistic regression and the A⁻¹ V A⁻ᵀ sandwich.
# Pure functions of their inputs; nothing here logs above DEBUG.

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import expit

from src.errors import DataValidationError, NonConvergenceError, SeparationError, SingularityError

_LOG = logging.getLogger(__name__)

RANK_TOL = 1e-10
LOGISTIC_TOL = 1e-8
LOGISTIC_MAX_ITER = 50
SEPARATION_BOUND = 30.0


@dataclass(frozen=True)
class GlmFit:
    """Coefficients of a downstream model plus the solver's diagnostics."""

    coefficients: np.ndarray
    gradient_norm: float
    hessian: np.ndarray
    iterations: int
    converged: bool


def check_conditioning(M: np.ndarray, who: str) -> None:
    """Raise :class:`SingularityError` when σ_min < 1e-10 · σ_max."""
    s = linalg.svdvals(np.atleast_2d(M))
    if s.size == 0 or not np.all(np.isfinite(s)) or s[0] == 0.0 or s[-1] < RANK_TOL * s[0]:
        raise SingularityError(f"{who}: matrix is singular or rank-deficient.")


# ──────────────────────────────────────────────────────────────────────────
# Least squares
# ──────────────────────────────────────────────────────────────────────────
def ols_solve(X: np.ndarray, y: np.ndarray) -> GlmFit:
    """
    Minimise ‖y − Xβ‖² with a thin QR decomposition (no normal equations).

    ``hessian`` is XᵀX and ``gradient_norm`` the max-norm of Xᵀr, which is
    zero up to round-off at the solution.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    if n <= k:
        raise SingularityError(f"ols_solve: need more rows than columns (n={n}, p+1={k}).")
    check_conditioning(X, "ols_solve")

    Q, R = linalg.qr(X, mode="economic")
    beta = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    return GlmFit(
        coefficients=beta,
        gradient_norm=float(np.max(np.abs(X.T @ resid))),
        hessian=X.T @ X,
        iterations=1,
        converged=True,
    )


# ──────────────────────────────────────────────────────────────────────────
# Logistic regression
# ──────────────────────────────────────────────────────────────────────────
def logistic_loglik(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def logistic_score(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of the log-likelihood, Xᵀ(y − expit(Xβ))."""
    return X.T @ (y - expit(X @ beta))


def logistic_hessian(beta: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Hessian of the *negative* log-likelihood, Xᵀ diag(μ(1−μ)) X."""
    mu = expit(X @ beta)
    return (X * (mu * (1.0 - mu))[:, None]).T @ X


def logistic_solve(
    X: np.ndarray,
    y: np.ndarray,
    tol: float = LOGISTIC_TOL,
    max_iter: int = LOGISTIC_MAX_ITER,
) -> GlmFit:
    """
    Newton-Raphson on the logistic log-likelihood, starting at β = 0.

    Converged when the score max-norm drops below ``tol``.  A coefficient
    max-norm above 30 during iteration is reported as separation.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DataValidationError("logistic_solve: outcome must be coded 0/1.")
    if y.min() == y.max():
        raise DataValidationError("logistic_solve: outcome contains a single class.")
    check_conditioning(X, "logistic_solve")

    beta = np.zeros(X.shape[1])
    for iteration in range(max_iter + 1):
        score = logistic_score(beta, X, y)
        gnorm = float(np.max(np.abs(score)))
        _LOG.debug("logistic_solve iter=%d |score|=%.3e", iteration, gnorm)
        if gnorm < tol:
            return GlmFit(
                coefficients=beta,
                gradient_norm=gnorm,
                hessian=logistic_hessian(beta, X),
                iterations=iteration,
                converged=True,
            )
        if iteration == max_iter:
            break
        try:
            step = linalg.solve(logistic_hessian(beta, X), score, assume_a="pos")
        except linalg.LinAlgError as exc:
            raise SingularityError(f"logistic_solve: singular Hessian at iteration {iteration}") from exc
        beta = beta + step
        if np.max(np.abs(beta)) > SEPARATION_BOUND:
            raise SeparationError(
                f"logistic_solve: |beta| exceeded {SEPARATION_BOUND:g} at iteration "
                f"{iteration + 1}; the classes look separated."
            )

    raise NonConvergenceError(
        f"logistic_solve: no convergence after {max_iter} iterations (|score|={gnorm:.3e}).",
        last=beta,
        residual=gnorm,
    )


# ──────────────────────────────────────────────────────────────────────────
# Sandwich
# ──────────────────────────────────────────────────────────────────────────
def sandwich_variance(A: np.ndarray, V: np.ndarray) -> np.ndarray:
    """A⁻¹ V A⁻ᵀ via two linear solves, symmetrised as (M + Mᵀ)/2."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    check_conditioning(A, "sandwich_variance")
    left = linalg.solve(A, V)
    M = linalg.solve(A, left.T).T
    return (M + M.T) / 2.0
