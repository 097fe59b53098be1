"""
pspa.py
────────────────────────────────────────────────────────────────────────────
Post-prediction adaptive inference.  Like PPI++, but the weight on the
prediction-based correction is chosen per coefficient:

    0 = (1/n) Σ_𝓛 ψ(θ; Y, x) + diag(ω) · [ (1/N) Σ_𝓤 ψ(θ; f, x) − (1/n) Σ_𝓛 ψ(θ; f, x) ]

    ω̂_j = Cov_𝓛(ψ_Y,j, ψ_f,j) / ( Var_𝓛(ψ_f,j) + (n/N) · Var_𝓤(ψ_f,j) ),  clipped to [0, 1]

with the plug-ins taken at the labeled-only solution.  ω = 0 recovers the
classic fit; ω = 1 for the mean recovers the PPI rectified mean.
"""

from __future__ import annotations

import logging

import numpy as np

from src.config import MethodConfig
from src.dataset import Formula, Split
from src.methods.estimating import (
    EstimatingFunction,
    IpdProblem,
    RectifiedEquation,
    cross_covariance,
    fit_weighted,
    solve_estimating_equation,
)
from src.methods.result import IpdFit, build_fit

_LOG = logging.getLogger(__name__)

DEGENERATE_REL_TOL = 1e-12


def fit_pspa(formula: Formula, split: Split, config: MethodConfig) -> IpdFit:
    problem = IpdProblem.from_split(formula, split)
    fn = EstimatingFunction(config.estimand, config.q)
    d = fn.dimension(problem.X_l)

    intermediates: dict[str, object] = {}
    if config.omega_value is not None:
        omega = np.full(d, float(config.omega_value))
        intermediates["omega_pinned"] = 1.0
    else:
        omega, degenerate = tune_omega(fn, problem)
        intermediates["omega_degenerate"] = [float(x) for x in degenerate]
    intermediates["omega_hat"] = [float(x) for x in omega]

    theta, cov = fit_weighted(fn, problem, omega)
    _LOG.info("pspa/%s done: omega=%s", config.estimand, np.round(omega, 4).tolist())
    return build_fit(
        config=config,
        formula=formula,
        estimates=theta,
        covariance=cov,
        n=problem.n,
        N=problem.N,
        intermediates=intermediates,
        uses_unlabeled=bool(np.any(omega != 0.0)),
    )


def tune_omega(fn: EstimatingFunction, problem: IpdProblem) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate ω̂ in [0, 1] and a per-coordinate degenerate flag."""
    pilot = solve_estimating_equation(RectifiedEquation.with_weight(fn, problem, 0.0))
    p = problem
    psi_y = fn.psi(pilot, p.y_l, p.X_l)
    psi_f = fn.psi(pilot, p.f_l, p.X_l)
    psi_u = fn.psi(pilot, p.f_u, p.X_u)

    cross = np.diag(cross_covariance(psi_y, psi_f))
    var_l = psi_f.var(axis=0, ddof=1)
    var_u = psi_u.var(axis=0, ddof=1)
    den = var_l + (p.n / p.N) * var_u
    scale = np.maximum(1.0, psi_y.var(axis=0, ddof=1))

    degenerate = ~np.isfinite(den) | (den <= DEGENERATE_REL_TOL * scale)
    if degenerate.any():
        _LOG.warning("pspa: zero prediction variance for coordinate(s) %s; omega set to 0",
                     np.flatnonzero(degenerate).tolist())
    omega = np.where(degenerate, 0.0, cross / np.where(degenerate, 1.0, den))
    return np.clip(omega, 0.0, 1.0), degenerate
