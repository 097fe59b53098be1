"""
src/workflows.py
────────────────
Declaratively maps method tags to the estimator that implements them.

The mapping lives in the OrderedDict `METHODS`, so a method can be swapped
in or out by editing that one object; `SUPPORT` says which estimands each
method accepts.  `fit_ipd()` validates the data, checks the tags, splits the
rows and dispatches.  It is what both the CLI driver (`src/main.py`), the
benchmark study (`src/study.py`) and the Flask façade (`app.py`) import.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from functools import partial
from typing import Any, Callable, Union

import pandas as pd
from pydantic import ValidationError

from src.config import MethodConfig
from src.dataset import Formula, Split, StackedDataset, from_frames, split
from src.errors import ConfigurationError, UnsupportedCombinationError
from src.methods import (
    fit_benchmark,
    fit_postpi_boot,
    fit_ppi,
    fit_ppi_plusplus,
    fit_pspa,
)
from src.methods.estimating import ESTIMANDS
from src.methods.result import IpdFit

_LOG = logging.getLogger(__name__)

FitFn = Callable[[Formula, Split, MethodConfig], IpdFit]

# ────────────────────────────────────────────────────────────────────────────
# Declarative method-to-callable table
# Edit this OrderedDict to customise the available methods.
# ────────────────────────────────────────────────────────────────────────────
METHODS: "OrderedDict[str, FitFn]" = OrderedDict(
    [
        ("postpi_boot",  fit_postpi_boot),                   # pseudo-outcome bootstrap
        ("ppi",          fit_ppi),                           # rectified equation, W = I
        ("ppi_plusplus", fit_ppi_plusplus),                  # W = λ̂·I
        ("pspa",         fit_pspa),                          # W = diag(ω̂)
        ("oracle",       partial(fit_benchmark, "oracle")),  # true Y on 𝓤
        ("naive",        partial(fit_benchmark, "naive")),   # f as if it were Y
        ("classic",      partial(fit_benchmark, "classic")), # 𝓛 only
    ]
)

IPD_METHODS: tuple[str, ...] = ("postpi_boot", "ppi", "ppi_plusplus", "pspa")

SUPPORT: dict[str, frozenset[str]] = {
    name: frozenset(ESTIMANDS) for name in METHODS
}
SUPPORT["postpi_boot"] = frozenset({"ols", "logistic"})

Data = Union[StackedDataset, tuple[pd.DataFrame, pd.DataFrame]]


# ────────────────────────────────────────────────────────────────────────────
# Helpers
# ────────────────────────────────────────────────────────────────────────────
def make_config(**options: Any) -> MethodConfig:
    """Build a :class:`MethodConfig`, turning pydantic failures into ConfigurationError."""
    try:
        return MethodConfig(**options)
    except ValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}"
            for err in exc.errors()
        )
        raise ConfigurationError(f"config: {details}") from exc


def check_tags(method: str, estimand: str) -> None:
    if estimand not in ESTIMANDS:
        raise ConfigurationError(
            f"config: unknown estimand '{estimand}' (valid: {', '.join(ESTIMANDS)})."
        )
    if method not in METHODS:
        raise ConfigurationError(
            f"config: unknown method '{method}' (valid: {', '.join(METHODS)})."
        )
    if estimand not in SUPPORT[method]:
        raise UnsupportedCombinationError(
            f"{method}: estimand '{estimand}' is not supported "
            f"(supported: {', '.join(sorted(SUPPORT[method]))})."
        )


# ────────────────────────────────────────────────────────────────────────────
# Public orchestrator helper
# ────────────────────────────────────────────────────────────────────────────
def fit_ipd(formula: Formula, data: Data, config: MethodConfig) -> IpdFit:
    """
    Fit one method to one dataset.

    Parameters
    ----------
    formula : Formula
        ``observed - predicted ~ covariates``.
    data : StackedDataset or (labeled, unlabeled) pair of DataFrames
        A pair is stacked with synthesized labels before validation.
    config : MethodConfig
        Method tag, estimand and options.

    Returns
    -------
    IpdFit
    """
    check_tags(config.method, config.estimand)
    formula.check_estimand(config.estimand)

    if isinstance(data, tuple):
        data = from_frames(data[0], data[1], formula)
    else:
        data.validate(formula)
    rows = split(data)

    _LOG.debug("dispatch %s/%s (n=%d, N=%d)", config.method, config.estimand, rows.n, rows.N)
    return METHODS[config.method](formula, rows, config)
