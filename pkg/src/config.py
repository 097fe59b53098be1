"""
src/config.py
════════════════════════════════════════════════════════════════════════════
Centralised configuration for *ipd-inference*.

Two kinds of knobs live here:

*  **Settings** – process-level defaults read from environment variables or
   the optional `.env` file in the project root (pydantic-settings).  The CLI
   and the Flask façade start from these and let flags override them.
*  **MethodConfig** – the per-fit options handed to :func:`workflows.fit_ipd`
   (method tag, estimand, α, quantile level, bootstrap count, seed and the
   method-specific switches).

Both are frozen pydantic models, so a bad value fails with a clear
`ValidationError` *before* any numerics run.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    All process-level configuration values with type validation.

    Any field can be overridden by exporting an environment variable with
    the same name (case-insensitive), or by editing a local `.env` file.

    Examples
    --------
    ```bash
    export IPD_JOBS=4          # parallel Monte Carlo replicates
    export LOG_LEVEL=DEBUG     # Newton iterations, residual norms
    ```
    """

    # ──────────────────────────────────────────────────────────────────────
    # Inference defaults
    # ──────────────────────────────────────────────────────────────────────
    IPD_ALPHA: float = Field(
        0.05,
        gt=0.0,
        lt=1.0,
        description="Significance level for the 100(1-alpha)% intervals.",
    )

    IPD_NBOOT: int = Field(
        200,
        ge=2,
        description="Bootstrap replicates for postpi_boot.",
    )

    IPD_LABEL_COLUMN: str = Field(
        "set",
        description="Name of the column holding training/labeled/unlabeled.",
    )

    # ──────────────────────────────────────────────────────────────────────
    # Study harness knobs
    # ──────────────────────────────────────────────────────────────────────
    IPD_REPLICATES: int = Field(
        500,
        ge=2,
        description="Monte Carlo replicates for `ipd benchmark`.",
    )

    IPD_JOBS: int = Field(
        1,
        ge=1,
        le=256,
        description="Worker processes for the benchmark study.",
    )

    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        "INFO",
        description="Root log-level for the whole application.",
    )

    @field_validator("IPD_LABEL_COLUMN")
    @classmethod
    def _label_not_blank(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("IPD_LABEL_COLUMN must not be empty.")
        return v

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        frozen=True,
        extra="ignore",
    )

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"Settings(alpha={self.IPD_ALPHA}, nboot={self.IPD_NBOOT}, "
            f"jobs={self.IPD_JOBS}, log_level='{self.LOG_LEVEL}')"
        )


# ──────────────────────────────────────────────────────────────────────────
# Per-fit options
# ──────────────────────────────────────────────────────────────────────────
class MethodConfig(BaseModel):
    """
    Options for one call of :func:`src.workflows.fit_ipd`.

    ``method`` and ``estimand`` are free strings here; the dispatch table in
    ``workflows`` is the single source of truth for the valid tags and
    rejects unknown ones with a :class:`~src.errors.ConfigurationError`.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: str
    estimand: str
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    q: Optional[float] = Field(None, gt=0.0, lt=1.0)
    nboot: int = Field(200, ge=2)
    seed: int = Field(0, ge=0, lt=2**64)
    lambda_clip: bool = True

    # method-specific extras
    lambda_value: Optional[float] = None
    omega_value: Optional[float] = None
    coord: Optional[int] = Field(None, ge=0)
    postpi_se: Literal["npar", "par"] = "npar"
    postpi_resample_labeled: bool = True
    benchmark_se: Literal["model", "sandwich"] = "model"

    @model_validator(mode="after")
    def _quantile_level_iff_quantile(self) -> "MethodConfig":
        if self.estimand == "quantile" and self.q is None:
            raise ValueError("q is required when estimand = 'quantile'.")
        if self.estimand != "quantile" and self.q is not None:
            raise ValueError("q is only meaningful when estimand = 'quantile'.")
        return self
