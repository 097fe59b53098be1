"""
src/study.py
════════════════════════════════════════════════════════════════════════════
Monte Carlo benchmark study: coverage, bias and interval width of every
method over many simulated datasets.

Replicate r simulates its dataset from stream (seed, r) and hands the
methods a seed derived from stream (seed, r, 1), so the per-replicate
results do not depend on the worker count or on scheduling.  Aggregation is
a fold in replicate order.

Designs
───────
    ols    target = coefficient of X1 in ``Y - f ~ X1``; truth = effect
    mean   target = E[Y] via ``Y - f ~ 1``; truth = 0.75
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import IO, Iterable, Literal, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.dataset import FLOAT_FORMAT, parse_formula
from src.errors import IpdError, ReplicateFailureError
from src.simdat import SimConfig, simdat
from src.tools.rng import RngStream
from src.workflows import METHODS, SUPPORT, fit_ipd, make_config

_LOG = logging.getLogger(__name__)

MAX_FAILURE_SHARE = 0.05

DESIGNS: dict[str, tuple[str, str]] = {
    # design -> (formula, target term)
    "ols": ("Y - f ~ X1", "X1"),
    "mean": ("Y - f ~ 1", "mean"),
}
MEAN_DESIGN_TRUTH = 0.75  # E[X2²/2 + X4²/4]; the X1 and X3³ terms are centred

LONG_COLUMNS = ("replicate", "method", "term", "estimate", "conf_low", "conf_high", "covered", "width")

Target = Union[str, Path, IO[str]]


class StudyConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    replicates: int = Field(500, ge=2)
    seed: int = Field(..., ge=0, lt=2**64)
    design: Literal["ols", "mean"] = "ols"
    methods: tuple[str, ...] = tuple(METHODS)
    n_training: int = Field(100, ge=10)
    n_labeled: int = Field(100, ge=10)
    n_unlabeled: int = Field(1000, ge=10)
    effect: float = 1.0
    sigma_y: float = Field(4.0, gt=0.0)
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    nboot: int = Field(200, ge=2)
    jobs: int = Field(1, ge=1)

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, v: tuple[str, ...]) -> tuple[str, ...]:
        unknown = [m for m in v if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown method(s) {unknown}; valid: {', '.join(METHODS)}")
        if not v:
            raise ValueError("at least one method is required")
        return v

    @property
    def truth(self) -> float:
        return self.effect if self.design == "ols" else MEAN_DESIGN_TRUTH

    def active_methods(self) -> tuple[str, ...]:
        """Requested methods that support the design's estimand."""
        return tuple(m for m in self.methods if self.design in SUPPORT[m])


@dataclass(frozen=True)
class ReplicateRecord:
    replicate: int
    method: str
    term: str
    estimate: float
    conf_low: float
    conf_high: float
    covered: int
    width: float


@dataclass(frozen=True)
class StudyRow:
    method: str
    replicates: int
    failures: int
    coverage: float
    mean_width: float
    mean_estimate: float
    bias: float
    mc_se: float


@dataclass(frozen=True)
class StudyReport:
    config: StudyConfig
    rows: tuple[StudyRow, ...]
    records: tuple[ReplicateRecord, ...]

    def row(self, method: str) -> StudyRow:
        return next(r for r in self.rows if r.method == method)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows], columns=list(StudyRow.__dataclass_fields__))

    def long_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.records], columns=list(LONG_COLUMNS))

    def write(self, report: Target, long: Target | None = None) -> None:
        """Report CSV (and optionally the long-format replicate CSV)."""
        _write(self.to_frame(), report)
        if long is not None:
            _write(self.long_frame(), long)


def _write(frame: pd.DataFrame, target: Target) -> None:
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


# ──────────────────────────────────────────────────────────────────────────
# One replicate
# ──────────────────────────────────────────────────────────────────────────
def run_replicate(config: StudyConfig, r: int) -> tuple[list[ReplicateRecord], list[str]]:
    """All active fits on replicate ``r``; returns (records, failed methods)."""
    methods = config.active_methods()
    sim = SimConfig(
        n_training=config.n_training,
        n_labeled=config.n_labeled,
        n_unlabeled=config.n_unlabeled,
        effect=config.effect,
        sigma_y=config.sigma_y,
        model=config.design,
        seed=config.seed,
        stream_id=r,
    )
    try:
        data = simdat(sim)
    except IpdError as exc:
        _LOG.warning("replicate %d: simulation failed (%s)", r, exc)
        return [], list(methods)

    formula_text, term = DESIGNS[config.design]
    formula = parse_formula(formula_text)
    method_seed = RngStream(config.seed, r).child(1).derive_seed()

    records: list[ReplicateRecord] = []
    failed: list[str] = []
    for method in methods:
        mc = make_config(
            method=method,
            estimand=config.design,
            alpha=config.alpha,
            nboot=config.nboot,
            seed=method_seed,
        )
        try:
            fit = fit_ipd(formula, data, mc)
        except IpdError as exc:
            _LOG.warning("replicate %d: %s failed (%s)", r, method, exc)
            failed.append(method)
            continue
        j = fit.terms.index(term)
        lo, hi = float(fit.ci_lower[j]), float(fit.ci_upper[j])
        records.append(
            ReplicateRecord(
                replicate=r,
                method=method,
                term=term,
                estimate=float(fit.estimates[j]),
                conf_low=lo,
                conf_high=hi,
                covered=int(lo <= config.truth <= hi),
                width=hi - lo,
            )
        )
    return records, failed


def _run_replicate_star(args: tuple[StudyConfig, int]) -> tuple[list[ReplicateRecord], list[str]]:
    return run_replicate(*args)


# ──────────────────────────────────────────────────────────────────────────
# Whole study
# ──────────────────────────────────────────────────────────────────────────
def run_study(config: StudyConfig) -> StudyReport:
    work = [(config, r) for r in range(config.replicates)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_replicate_star, work, chunksize=_chunksize(config)))
    else:
        results = []
        for item in work:
            results.append(_run_replicate_star(item))
            done = len(results)
            if done % max(1, config.replicates // 10) == 0:
                _LOG.info("study: %d/%d replicates", done, config.replicates)

    records = [rec for recs, _ in results for rec in recs]
    failures: dict[str, int] = {m: 0 for m in config.active_methods()}
    for _, failed in results:
        for m in failed:
            failures[m] += 1

    too_many = {m: k for m, k in failures.items() if k > MAX_FAILURE_SHARE * config.replicates}
    if too_many:
        raise ReplicateFailureError(
            "study: too many failed replicates: "
            + ", ".join(f"{m} {k}/{config.replicates}" for m, k in too_many.items())
        )

    rows = tuple(
        _aggregate(m, [r for r in records if r.method == m], failures[m], config.truth)
        for m in config.active_methods()
    )
    return StudyReport(config=config, rows=rows, records=tuple(records))


def _aggregate(method: str, records: Iterable[ReplicateRecord], failures: int, truth: float) -> StudyRow:
    records = list(records)
    count = len(records)
    if count == 0:
        raise ReplicateFailureError(f"study: {method} produced no successful replicate.")
    covered = np.array([r.covered for r in records], dtype=float)
    widths = np.array([r.width for r in records])
    estimates = np.array([r.estimate for r in records])
    coverage = float(covered.mean())
    mean_estimate = float(estimates.mean())
    return StudyRow(
        method=method,
        replicates=count,
        failures=failures,
        coverage=coverage,
        mean_width=float(widths.mean()),
        mean_estimate=mean_estimate,
        bias=mean_estimate - truth,
        mc_se=math.sqrt(coverage * (1.0 - coverage) / count),
    )


def _chunksize(config: StudyConfig) -> int:
    return max(1, config.replicates // (4 * config.jobs))

