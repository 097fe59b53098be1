# src/tools/inference.py
# ────────────────────────────────────────────────────────────────────────────
# Small inferential primitives: the type-1 sample quantile and normal-quantile
# confidence limits.

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm


def sample_quantile(y: np.ndarray, q: float) -> float:
    """
    Left-continuous inverse empirical CDF: the smallest value v with
    #{y ≤ v}/n ≥ q.
    """
    y = np.sort(np.asarray(y, dtype=float).ravel())
    n = y.size
    if n == 0:
        raise ValueError("sample_quantile: y must be non-empty.")
    if not 0.0 < q < 1.0:
        raise ValueError("sample_quantile: q must lie in (0, 1).")
    # k = ⌈nq⌉, corrected for round-off in n*q so that k/n ≥ q holds exactly
    k = max(1, math.ceil(n * q))
    while k > 1 and (k - 1) / n >= q:
        k -= 1
    while k < n and k / n < q:
        k += 1
    return float(y[k - 1])


def z_value(alpha: float) -> float:
    """Two-sided standard normal critical value z_{1−α/2}."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1).")
    return float(norm.ppf(1.0 - alpha / 2.0))


def normal_ci(estimate: float, se: float, alpha: float) -> tuple[float, float]:
    """estimate ∓ z_{1−α/2}·se."""
    if se < 0:
        raise ValueError("normal_ci: se must be non-negative.")
    half = z_value(alpha) * se
    return estimate - half, estimate + half
