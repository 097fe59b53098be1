# tests/conftest.py

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from src.dataset import StackedDataset, from_frame, parse_formula, split
from src.simdat import SimConfig, simdat


def stacked(y_l, f_l, f_u, x_l=None, x_u=None, y_u=None) -> StackedDataset:
    """Small hand-built stacked dataset; Y is NA on unlabeled rows unless given."""
    n, N = len(y_l), len(f_u)
    frame = pd.DataFrame(
        {
            "set": ["labeled"] * n + ["unlabeled"] * N,
            "Y": np.concatenate([y_l, np.full(N, np.nan) if y_u is None else y_u]),
            "f": np.concatenate([f_l, f_u]),
        }
    )
    if x_l is not None:
        x = np.vstack([np.asarray(x_l, float).reshape(n, -1), np.asarray(x_u, float).reshape(N, -1)])
        for j in range(x.shape[1]):
            frame[f"X{j + 1}"] = x[:, j]
    return from_frame(frame, "set")


def random_regression(seed: int, n: int = 60, N: int = 200, p: int = 2, noise: float = 1.0):
    """Linear truth with informative but imperfect predictions."""
    rng = np.random.default_rng(seed)
    x_l = rng.normal(size=(n, p))
    x_u = rng.normal(size=(N, p))
    beta = np.arange(1, p + 1, dtype=float)
    y_l = 0.5 + x_l @ beta + rng.normal(scale=noise, size=n)
    f_l = 0.5 + x_l @ beta + rng.normal(scale=0.5, size=n) + 0.3
    f_u = 0.5 + x_u @ beta + rng.normal(scale=0.5, size=N) + 0.3
    return stacked(y_l, f_l, f_u, x_l, x_u)


def formula_for(p: int):
    return parse_formula("Y - f ~ " + " + ".join(f"X{j + 1}" for j in range(p)))


@pytest.fixture(scope="session")
def sim_ols() -> StackedDataset:
    return simdat(SimConfig(seed=2024))


@pytest.fixture(scope="session")
def sim_split(sim_ols):
    return split(sim_ols)
