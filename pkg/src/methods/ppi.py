"""
ppi.py
────────────────────────────────────────────────────────────────────────────
Prediction-powered inference: the prediction-based equation on the
unlabeled rows plus the labeled-set rectifier,

    0 = (1/N) Σ_𝓤 ψ(θ; f, x) + (1/n) Σ_𝓛 [ψ(θ; Y, x) − ψ(θ; f, x)],

i.e. the rectified equation with W = I.  For the mean this is the closed
form mean_𝓤(f) + mean_𝓛(Y − f).
"""

from __future__ import annotations

import logging

from src.config import MethodConfig
from src.dataset import Formula, Split
from src.methods.estimating import EstimatingFunction, IpdProblem, fit_weighted
from src.methods.result import IpdFit, build_fit

_LOG = logging.getLogger(__name__)


def fit_ppi(formula: Formula, split: Split, config: MethodConfig) -> IpdFit:
    problem = IpdProblem.from_split(formula, split)
    fn = EstimatingFunction(config.estimand, config.q)
    theta, cov = fit_weighted(fn, problem, 1.0)
    _LOG.info("ppi/%s done (n=%d, N=%d)", config.estimand, problem.n, problem.N)
    return build_fit(
        config=config,
        formula=formula,
        estimates=theta,
        covariance=cov,
        n=problem.n,
        N=problem.N,
    )
