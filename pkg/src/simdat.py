"""
src/simdat.py
════════════════════════════════════════════════════════════════════════════
Synthetic stacked data for trying out and benchmarking the methods.

Design (continuous outcome)
───────────────────────────
    X1 … X4 ~ N(0, 1) i.i.d.
    Y = effect·X1 + X2²/2 + X3³/3 + X4²/4 + ε,     ε ~ N(0, sigma_y²)

The rows are split into *training*, *labeled* and *unlabeled* sets.  An
additive polynomial regression is fitted to the training rows only and its
predictions fill column ``f`` on the labeled and unlabeled rows (``f`` is
missing on the training rows).  The true ``Y`` is kept on every row so the
oracle benchmark and coverage checks can use it.

For ``model="logistic"`` the continuous value is a latent Y*; the observed
outcome is ``Y = 1(Y* > median Y*)``, the prediction model is a linear
probability model on the same basis (least squares on the 0/1 outcome, so
it exists for any training set the size checks admit), ``f_prob`` holds its
fitted values clipped to [0, 1] and ``f`` the 0/1 classification at 0.5.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from src.dataset import LABELED, TRAINING, UNLABELED, StackedDataset, from_frame
from src.tools.linalg import ols_solve
from src.tools.rng import RngStream

_LOG = logging.getLogger(__name__)

COVARIATES: tuple[str, ...] = ("X1", "X2", "X3", "X4")
MIN_ROWS = 10


class SimConfig(BaseModel):
    """Sizes, effect, noise and seed of one simulated dataset."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_training: int = Field(100, ge=MIN_ROWS)
    n_labeled: int = Field(100, ge=MIN_ROWS)
    n_unlabeled: int = Field(1000, ge=MIN_ROWS)
    effect: float = 1.0
    sigma_y: float = Field(4.0, gt=0.0)
    model: Literal["mean", "quantile", "ols", "logistic"] = "ols"
    seed: int = Field(0, ge=0, lt=2**64)
    stream_id: int = Field(0, ge=0, lt=2**64)
    label_column: str = "set"


# ──────────────────────────────────────────────────────────────────────────
# Prediction model
# ──────────────────────────────────────────────────────────────────────────
def polynomial_basis(X: np.ndarray) -> np.ndarray:
    """``[1, X1, X2, X2², X3, X3², X3³, X4, X4²]`` for an (m, 4) covariate block."""
    x1, x2, x3, x4 = X.T
    return np.column_stack(
        [np.ones(len(X)), x1, x2, x2**2, x3, x3**2, x3**3, x4, x4**2]
    )


@dataclass(frozen=True)
class PredictionModel:
    coefficients: np.ndarray
    binary: bool = False

    def probabilities(self, X: np.ndarray) -> np.ndarray:
        return np.clip(polynomial_basis(X) @ self.coefficients, 0.0, 1.0)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        if self.binary:
            return (self.probabilities(X) > 0.5).astype(float)
        return polynomial_basis(X) @ self.coefficients


def train_prediction_model(X: np.ndarray, y: np.ndarray, binary: bool = False) -> PredictionModel:
    """Least squares of y on the polynomial basis (y coded 0/1 when ``binary``)."""
    if len(y) < MIN_ROWS:
        raise ValueError(f"simdat: need at least {MIN_ROWS} training rows, got {len(y)}.")
    B = polynomial_basis(X)
    fit = ols_solve(B, y)
    _LOG.debug("prediction model trained on %d rows (binary=%s)", len(y), binary)
    return PredictionModel(fit.coefficients, binary)


# ──────────────────────────────────────────────────────────────────────────
# Generator
# ──────────────────────────────────────────────────────────────────────────
def simdat(config: SimConfig | None = None) -> StackedDataset:
    config = config or SimConfig()
    rng = RngStream(config.seed, config.stream_id).generator()

    sizes = (config.n_training, config.n_labeled, config.n_unlabeled)
    total = sum(sizes)
    X = rng.standard_normal((total, len(COVARIATES)))
    noise = rng.standard_normal(total) * config.sigma_y
    latent = config.effect * X[:, 0] + X[:, 1] ** 2 / 2 + X[:, 2] ** 3 / 3 + X[:, 3] ** 2 / 4 + noise

    binary = config.model == "logistic"
    y = (latent > np.median(latent)).astype(float) if binary else latent

    train = slice(0, config.n_training)
    predictor = train_prediction_model(X[train], y[train], binary)

    f = predictor(X)
    f[train] = np.nan
    labels = np.repeat([TRAINING, LABELED, UNLABELED], sizes)

    columns: dict[str, np.ndarray] = {config.label_column: labels, "Y": y, "f": f}
    if binary:
        prob = predictor.probabilities(X)
        prob[train] = np.nan
        columns["f_prob"] = prob
    for j, name in enumerate(COVARIATES):
        columns[name] = X[:, j]

    _LOG.info("simulated %d rows (%s design, seed=%d)", total, config.model, config.seed)
    return from_frame(pd.DataFrame(columns), config.label_column)
