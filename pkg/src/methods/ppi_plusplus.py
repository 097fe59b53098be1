"""
ppi_plusplus.py
────────────────────────────────────────────────────────────────────────────
PPI++ – power-tuned prediction-powered inference.

Solves the rectified equation with W = λ·I.  The scalar λ minimises the
estimated asymptotic variance of the target coordinate(s):

    λ̂ = tr_T(H⁻¹ (C_Yf + C_fY) H⁻ᵀ)
         ─────────────────────────────────────────────────────────
         2 · [ tr_T(H⁻¹ C_ff^𝓛 H⁻ᵀ) + (n/N) · tr_T(H⁻¹ C_ff^𝓤 H⁻ᵀ) ]

with the plug-ins evaluated at the PPI (λ = 1) solution and H the labeled
Jacobian there.  λ = 0 recovers the classic fit, λ = 1 recovers PPI.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy import linalg

from src.config import MethodConfig
from src.dataset import Formula, Split
from src.errors import ConfigurationError
from src.methods.estimating import (
    EstimatingFunction,
    IpdProblem,
    RectifiedEquation,
    covariance,
    cross_covariance,
    fit_weighted,
    solve_estimating_equation,
)
from src.methods.result import IpdFit, build_fit
from src.tools.linalg import check_conditioning

_LOG = logging.getLogger(__name__)

DEGENERATE_REL_TOL = 1e-12


def fit_ppi_plusplus(formula: Formula, split: Split, config: MethodConfig) -> IpdFit:
    problem = IpdProblem.from_split(formula, split)
    fn = EstimatingFunction(config.estimand, config.q)

    intermediates: dict[str, float] = {}
    if config.lambda_value is not None:
        lam = float(config.lambda_value)
        intermediates["lambda_pinned"] = 1.0
    else:
        lam, degenerate = tune_lambda(fn, problem, config.coord, config.lambda_clip)
        intermediates["lambda_degenerate"] = float(degenerate)
    intermediates["lambda_hat"] = lam

    theta, cov = fit_weighted(fn, problem, lam)
    _LOG.info("ppi_plusplus/%s done: lambda=%.4f", config.estimand, lam)
    return build_fit(
        config=config,
        formula=formula,
        estimates=theta,
        covariance=cov,
        n=problem.n,
        N=problem.N,
        intermediates=intermediates,
        uses_unlabeled=lam != 0.0,
    )


def tune_lambda(
    fn: EstimatingFunction,
    problem: IpdProblem,
    coord: int | None = None,
    clip: bool = True,
) -> tuple[float, bool]:
    """Variance-minimising λ̂; returns (λ̂, degenerate-flag)."""
    pilot_eqn = RectifiedEquation.with_weight(fn, problem, 1.0)
    pilot = solve_estimating_equation(pilot_eqn)
    d = pilot_eqn.dimension
    if coord is not None and coord >= d:
        raise ConfigurationError(f"ppi_plusplus: coord={coord} but the estimand has {d} coefficient(s).")

    p = problem
    psi_y = fn.psi(pilot, p.y_l, p.X_l)
    psi_f = fn.psi(pilot, p.f_l, p.X_l)
    psi_u = fn.psi(pilot, p.f_u, p.X_u)

    if fn.smooth:
        H = fn.jacobian(pilot, p.y_l, p.X_l)
        check_conditioning(H, "ppi_plusplus")
        G = linalg.inv(H)
    else:
        G = np.eye(1)  # scalar bread cancels in the ratio

    def trace_t(M: np.ndarray) -> float:
        S = G @ M @ G.T
        return float(np.trace(S) if coord is None else S[coord, coord])

    C_yf = cross_covariance(psi_y, psi_f)
    num = trace_t(C_yf + C_yf.T)
    den = 2.0 * (trace_t(covariance(psi_f)) + (p.n / p.N) * trace_t(covariance(psi_u)))
    scale = max(1.0, abs(trace_t(covariance(psi_y))))

    if not np.isfinite(den) or den <= DEGENERATE_REL_TOL * scale:
        _LOG.warning("ppi_plusplus: zero prediction variance; lambda set to 0")
        return 0.0, True

    lam = num / den
    if clip:
        lam = float(np.clip(lam, 0.0, 1.0))
    return float(lam), False
