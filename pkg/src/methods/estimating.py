"""
estimating.py
────────────────────────────────────────────────────────────────────────────
Estimating-equation machinery shared by the direct-calibration methods.

Every estimand is an M-estimator defined by a per-row estimating function ψ:

    mean        ψ = y − θ
    quantile    ψ = 1(y ≤ θ) − q
    ols         ψ = x·(y − xᵀθ)
    logistic    ψ = x·(y − expit(xᵀθ))

PPI, PPI++ and PSPA all solve one *weighted rectified* equation

    0 = (1/n) Σ_𝓛 ψ(θ; Y, x) + W · [ (1/N) Σ_𝓤 ψ(θ; f, x) − (1/n) Σ_𝓛 ψ(θ; f, x) ]

and differ only in the d×d weight W (I, λ·I, diag(ω)); W = 0 is the
labeled-only ("classic") equation.  The variance is the sandwich A⁻¹ V A⁻ᵀ
with A the Jacobian of the averaged equation and

    V = (1/n) Cov_𝓛[ψ_Y − W ψ_f] + (1/N) W Cov_𝓤[ψ_f] Wᵀ.

Smooth estimands are solved by damped Newton; the quantile equation is a
step function and is solved by bisection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import expit
from scipy.stats import gaussian_kde

from src.dataset import Formula, Split, design_matrix
from src.errors import (
    DataValidationError,
    NonConvergenceError,
    SingularityError,
)
from src.tools.linalg import check_conditioning, sandwich_variance

_LOG = logging.getLogger(__name__)

NEWTON_TOL = 1e-9
NEWTON_MAX_ITER = 100
MAX_HALVINGS = 20
BISECTION_REL_TOL = 1e-9

ESTIMANDS: tuple[str, ...] = ("mean", "quantile", "ols", "logistic")


# ──────────────────────────────────────────────────────────────────────────
# Estimating functions
# ──────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class EstimatingFunction:
    estimand: str
    q: float | None = None

    def __post_init__(self) -> None:
        if self.estimand not in ESTIMANDS:
            raise ValueError(f"estimating: unknown estimand '{self.estimand}'.")
        if self.estimand == "quantile" and self.q is None:
            raise ValueError("estimating: quantile estimand needs q.")

    @property
    def smooth(self) -> bool:
        return self.estimand != "quantile"

    def psi(self, theta: np.ndarray, outcome: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Per-row ψ as an (m, d) array."""
        if self.estimand == "mean":
            return (outcome - theta[0])[:, None]
        if self.estimand == "quantile":
            return ((outcome <= theta[0]).astype(float) - self.q)[:, None]
        if self.estimand == "ols":
            return X * (outcome - X @ theta)[:, None]
        return X * (outcome - expit(X @ theta))[:, None]

    def mean_psi(self, theta: np.ndarray, outcome: np.ndarray, X: np.ndarray) -> np.ndarray:
        return self.psi(theta, outcome, X).mean(axis=0)

    def jacobian(self, theta: np.ndarray, outcome: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Derivative of the averaged ψ in θ (smooth estimands only)."""
        if self.estimand == "mean":
            return -np.ones((1, 1))
        if self.estimand == "ols":
            return -(X.T @ X) / X.shape[0]
        if self.estimand == "logistic":
            mu = expit(X @ theta)
            return -((X * (mu * (1.0 - mu))[:, None]).T @ X) / X.shape[0]
        raise ValueError("estimating: the quantile equation has no classical Jacobian.")

    def dimension(self, X: np.ndarray) -> int:
        return X.shape[1] if self.estimand in ("ols", "logistic") else 1


# ──────────────────────────────────────────────────────────────────────────
# Problem data
# ──────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class IpdProblem:
    """Design matrices and outcome vectors of 𝓛 (Y and f) and 𝓤 (f only)."""

    X_l: np.ndarray
    y_l: np.ndarray
    f_l: np.ndarray
    X_u: np.ndarray
    f_u: np.ndarray

    @property
    def n(self) -> int:
        return self.y_l.shape[0]

    @property
    def N(self) -> int:  # noqa: N802
        return self.f_u.shape[0]

    @classmethod
    def from_split(cls, formula: Formula, split: Split) -> "IpdProblem":
        X_l, y_l = design_matrix(split.labeled, formula, "observed")
        _, f_l = design_matrix(split.labeled, formula, "predicted")
        X_u, f_u = design_matrix(split.unlabeled, formula, "predicted")
        if len(y_l) < 2 or len(f_u) < 2:
            raise DataValidationError(
                "estimating: variance estimation needs at least 2 labeled and 2 unlabeled rows."
            )
        return cls(X_l=X_l, y_l=y_l, f_l=f_l, X_u=X_u, f_u=f_u)


# ──────────────────────────────────────────────────────────────────────────
# Combined equation
# ──────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class RectifiedEquation:
    """The weighted rectified equation above for a fixed weight matrix W."""

    fn: EstimatingFunction
    problem: IpdProblem
    weight: np.ndarray

    @classmethod
    def with_weight(
        cls, fn: EstimatingFunction, problem: IpdProblem, weight: float | np.ndarray
    ) -> "RectifiedEquation":
        d = fn.dimension(problem.X_l)
        w = np.asarray(weight, dtype=float)
        if w.ndim == 0:
            w = w * np.eye(d)
        elif w.ndim == 1:
            w = np.diag(w)
        if w.shape != (d, d):
            raise ValueError(f"estimating: weight must be {d}x{d}, got {w.shape}.")
        return cls(fn=fn, problem=problem, weight=w)

    @property
    def dimension(self) -> int:
        return self.weight.shape[0]

    def value(self, theta: np.ndarray) -> np.ndarray:
        p, fn = self.problem, self.fn
        labeled = fn.mean_psi(theta, p.y_l, p.X_l)
        correction = fn.mean_psi(theta, p.f_u, p.X_u) - fn.mean_psi(theta, p.f_l, p.X_l)
        return labeled + self.weight @ correction

    def jacobian(self, theta: np.ndarray) -> np.ndarray:
        p, fn = self.problem, self.fn
        J_l = fn.jacobian(theta, p.y_l, p.X_l)
        J_corr = fn.jacobian(theta, p.f_u, p.X_u) - fn.jacobian(theta, p.f_l, p.X_l)
        return J_l + self.weight @ J_corr

    def meat(self, theta: np.ndarray) -> np.ndarray:
        """V = (1/n) Cov_𝓛[ψ_Y − Wψ_f] + (1/N) W Cov_𝓤[ψ_f] Wᵀ."""
        p, fn, W = self.problem, self.fn, self.weight
        psi_y = fn.psi(theta, p.y_l, p.X_l)
        psi_f = fn.psi(theta, p.f_l, p.X_l)
        psi_u = fn.psi(theta, p.f_u, p.X_u)
        rectifier = covariance(psi_y - psi_f @ W.T)
        imputed = W @ covariance(psi_u) @ W.T
        return rectifier / p.n + imputed / p.N

    def bread(self, theta: np.ndarray) -> np.ndarray:
        """A for the sandwich; −f̂_Y(θ) for the quantile estimand."""
        if self.fn.smooth:
            return self.jacobian(theta)
        return np.array([[-outcome_density(self.problem.y_l, float(theta[0]))]])

    def covariance(self, theta: np.ndarray) -> np.ndarray:
        return sandwich_variance(self.bread(theta), self.meat(theta))


def covariance(rows: np.ndarray) -> np.ndarray:
    """Sample covariance of the columns of ``rows`` (1/(m−1) convention), always 2-D."""
    return np.atleast_2d(np.cov(rows, rowvar=False, ddof=1))


def cross_covariance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cov(a_j, b_k) over rows, d×d, 1/(m−1) convention."""
    da = a - a.mean(axis=0)
    db = b - b.mean(axis=0)
    return da.T @ db / (a.shape[0] - 1)


def outcome_density(y: np.ndarray, at: float) -> float:
    """Gaussian kernel density (Scott bandwidth) of ``y`` evaluated at ``at``."""
    try:
        density = float(gaussian_kde(y)(at)[0])
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularityError(
            "estimating: cannot estimate the outcome density (constant outcome?)."
        ) from exc
    if not np.isfinite(density) or density <= 0.0:
        raise SingularityError(f"estimating: outcome density at {at:g} is zero.")
    return density


# ──────────────────────────────────────────────────────────────────────────
# Solvers
# ──────────────────────────────────────────────────────────────────────────
def solve_estimating_equation(eqn: RectifiedEquation, start: np.ndarray | None = None) -> np.ndarray:
    """
    Root of the combined equation.

    Smooth estimands: damped Newton, residual max-norm ≤ 1e-9 within 100
    iterations, halving the step (up to 20 times) while the residual does not
    decrease.  Quantile: bisection on the step function, snapped to the data
    point where the equation first becomes non-negative.
    """
    if not eqn.fn.smooth:
        return np.array([_bisect_quantile(eqn)])

    theta = np.zeros(eqn.dimension) if start is None else np.asarray(start, dtype=float).copy()
    residual = eqn.value(theta)
    rnorm = float(np.max(np.abs(residual)))

    for iteration in range(NEWTON_MAX_ITER):
        if rnorm <= NEWTON_TOL:
            return _polish(eqn, theta, rnorm)
        J = eqn.jacobian(theta)
        check_conditioning(J, "solve_estimating_equation")
        step = -linalg.solve(J, residual)

        scale = 1.0
        for _ in range(MAX_HALVINGS + 1):
            candidate = theta + scale * step
            cand_residual = eqn.value(candidate)
            cand_norm = float(np.max(np.abs(cand_residual)))
            if np.isfinite(cand_norm) and cand_norm < rnorm:
                break
            scale /= 2.0
        else:
            raise NonConvergenceError(
                f"solve_estimating_equation: step halving failed at iteration {iteration} "
                f"(residual {rnorm:.3e}).",
                last=theta,
                residual=rnorm,
            )
        theta, residual, rnorm = candidate, cand_residual, cand_norm
        _LOG.debug("newton iter=%d residual=%.3e step_scale=%g", iteration + 1, rnorm, scale)

    if rnorm <= NEWTON_TOL:
        return theta
    raise NonConvergenceError(
        f"solve_estimating_equation: no convergence in {NEWTON_MAX_ITER} iterations "
        f"(residual {rnorm:.3e}).",
        last=theta,
        residual=rnorm,
    )


def _polish(eqn: RectifiedEquation, theta: np.ndarray, rnorm: float) -> np.ndarray:
    # one more full Newton step, kept only if it lowers the residual
    if rnorm == 0.0:
        return theta
    J = eqn.jacobian(theta)
    try:
        check_conditioning(J, "solve_estimating_equation")
        candidate = theta - linalg.solve(J, eqn.value(theta))
    except (SingularityError, linalg.LinAlgError):
        return theta
    if float(np.max(np.abs(eqn.value(candidate)))) < rnorm:
        return candidate
    return theta


def _bisect_quantile(eqn: RectifiedEquation) -> float:
    p = eqn.problem
    support = np.unique(np.concatenate([p.y_l, p.f_l, p.f_u]))

    def g(t: float) -> float:
        return float(eqn.value(np.array([t]))[0])

    lo, hi = float(support[0]), float(support[-1])
    if g(lo) >= 0.0:
        return lo
    tol = BISECTION_REL_TOL * (hi - lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) >= 0.0:
            hi = mid
        else:
            lo = mid

    # the equation only jumps at data points: return the left end of the jump
    inside = support[(support > lo) & (support <= hi)]
    for point in inside:
        if g(float(point)) >= 0.0:
            return float(point)
    return hi


def fit_weighted(
    fn: EstimatingFunction, problem: IpdProblem, weight: float | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the rectified equation for ``weight``; returns (θ̂, covariance)."""
    eqn = RectifiedEquation.with_weight(fn, problem, weight)
    theta = solve_estimating_equation(eqn)
    return theta, eqn.covariance(theta)


def single_sample_problem(X: np.ndarray, y: np.ndarray) -> IpdProblem:
    """A problem whose labeled set is (X, y) and whose correction term is void."""
    return IpdProblem(X_l=X, y_l=y, f_l=y, X_u=X, f_u=y)
