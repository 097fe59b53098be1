"""
app.py
────────────────────────────────────────────────────────────────────────────
Minimal Flask façade for *ipd-inference*.

Endpoints
─────────
GET  /health                → "OK"               (liveness probe)
POST /fit                   → JSON fit           (core API)

    Content-Type: multipart/form-data
        file     = <stacked CSV with a label column>
        formula  = "Y - f ~ X1"
        method   = ppi | ppi_plusplus | pspa | postpi_boot | oracle | naive | classic
        model    = mean | quantile | ols | logistic
        label, alpha, q, nboot, seed   (optional)

The upload is parsed in memory and never written to disk.  The response has
the same schema as ``ipd fit``:

    {"glance": {...}, "tidy": [{...}, ...]}

Errors come back as {"error": {"type": ..., "message": ...}} with status 400
(usage or data problems) or 422 (numerical failure).

Run locally:

    export FLASK_APP=app.py
    python app.py          # or `flask run`

Behind a reverse proxy you can use `PORT=8080` to rebind.
"""

from __future__ import annotations

import io
import logging
import os
from typing import Any

from flask import Flask, jsonify, request
from flask_cors import CORS

from src.config import Settings
from src.dataset import load_stacked, parse_formula
from src.errors import ConfigurationError, IpdError, NumericalError
from src.report import to_dict
from src.workflows import fit_ipd, make_config

# ──────────────────────────────────────────────────────────────────────────
# Flask setup
# ──────────────────────────────────────────────────────────────────────────
app = Flask(__name__)
CORS(app)  # allow all origins; tighten in production as needed
logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
_LOG = logging.getLogger("api")

# Maximum upload size (bytes) – 25 MB by default
app.config["MAX_CONTENT_LENGTH"] = int(os.getenv("MAX_CSV_SIZE", 25 * 1024 * 1024))

SETTINGS = Settings()


# ──────────────────────────────────────────────────────────────────────────
# Routes
# ──────────────────────────────────────────────────────────────────────────
@app.get("/health")
def health() -> tuple[str, int]:
    """Liveness probe for containers / k8s."""
    return "OK", 200


@app.post("/fit")
def fit() -> tuple[Any, int]:
    """
    Main API endpoint.  Requires multipart/form-data with ``file``,
    ``formula``, ``method`` and ``model``.
    """
    missing = [k for k in ("formula", "method", "model") if not request.form.get(k, "").strip()]
    if "file" not in request.files:
        missing.insert(0, "file")
    if missing:
        return _error(ConfigurationError(f"api: missing field(s): {', '.join(missing)}"))

    form = request.form
    try:
        formula = parse_formula(form["formula"])
        config = make_config(
            method=form["method"].strip(),
            estimand=form["model"].strip(),
            alpha=_number(form, "alpha", float, SETTINGS.IPD_ALPHA),
            q=_number(form, "q", float, None),
            nboot=_number(form, "nboot", int, SETTINGS.IPD_NBOOT),
            seed=_number(form, "seed", int, 0),
        )
        text = io.StringIO(request.files["file"].read().decode("utf-8"))
        data = load_stacked(text, form.get("label", SETTINGS.IPD_LABEL_COLUMN), formula)

        _LOG.info("Fitting %s/%s on %d rows", config.method, config.estimand, data.rows)
        result = fit_ipd(formula, data, config)
    except IpdError as exc:
        _LOG.warning("Fit failed: %s", exc)
        return _error(exc)

    return jsonify(to_dict(result)), 200


# ──────────────────────────────────────────────────────────────────────────
# Helpers
# ──────────────────────────────────────────────────────────────────────────
def _number(form, key: str, kind: type, default: Any) -> Any:
    raw = form.get(key, "").strip()
    if not raw:
        return default
    try:
        return kind(raw)
    except ValueError:
        raise ConfigurationError(f"api: field '{key}' must be a {kind.__name__}, got {raw!r}.") from None


def _error(exc: IpdError) -> tuple[Any, int]:
    code = 422 if isinstance(exc, NumericalError) else 400
    return jsonify({"error": exc.to_dict()}), code


# ──────────────────────────────────────────────────────────────────────────
# Entry-point
# ──────────────────────────────────────────────────────────────────────────
if __name__ == "__main__":
    port = int(os.getenv("PORT", 9000))
    app.run(host="0.0.0.0", port=port)
