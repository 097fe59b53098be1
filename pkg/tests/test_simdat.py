# tests/test_simdat.py

import numpy as np
import pytest
from pydantic import ValidationError

from src.dataset import parse_formula
from src.simdat import SimConfig, polynomial_basis, simdat, train_prediction_model
from src.workflows import fit_ipd, make_config


def test_default_sizes_and_labels(sim_ols):
    assert sim_ols.rows == 1200
    assert sim_ols.label_counts() == {"training": 100, "labeled": 100, "unlabeled": 1000}
    assert list(sim_ols.frame.columns) == ["set", "Y", "f", "X1", "X2", "X3", "X4"]


def test_same_seed_is_bit_identical():
    a = simdat(SimConfig(seed=42)).frame
    b = simdat(SimConfig(seed=42)).frame
    for col in ("Y", "f", "X1", "X4"):
        assert a[col].to_numpy().tobytes() == b[col].to_numpy().tobytes()
    assert not np.array_equal(a["Y"], simdat(SimConfig(seed=43)).frame["Y"])


def test_stream_id_gives_independent_data():
    a = simdat(SimConfig(seed=1, stream_id=0)).frame["X1"]
    b = simdat(SimConfig(seed=1, stream_id=1)).frame["X1"]
    assert not np.array_equal(a, b)


def test_predictions_missing_only_on_training_rows(sim_ols):
    frame = sim_ols.frame
    training = sim_ols.labels == "training"
    assert frame.loc[training, "f"].isna().all()
    assert np.isfinite(frame.loc[~training, "f"]).all()
    assert np.isfinite(frame["Y"]).all()


def test_custom_sizes():
    data = simdat(SimConfig(n_training=20, n_labeled=30, n_unlabeled=40, seed=3))
    assert data.label_counts() == {"training": 20, "labeled": 30, "unlabeled": 40}


def test_logistic_variant_thresholds_latent_outcome():
    data = simdat(SimConfig(model="logistic", n_training=300, seed=4))
    frame = data.frame
    assert set(np.unique(frame["Y"])) == {0.0, 1.0}
    assert frame["Y"].mean() == pytest.approx(0.5, abs=0.01)
    inference = data.labels != "training"
    prob = frame.loc[inference, "f_prob"]
    assert ((prob >= 0) & (prob <= 1)).all()
    np.testing.assert_array_equal(frame.loc[inference, "f"], (prob > 0.5).astype(float))


@pytest.mark.parametrize("seed", range(20))
def test_logistic_variant_at_minimum_sizes(seed):
    data = simdat(SimConfig(n_training=10, n_labeled=10, n_unlabeled=10, model="logistic", seed=seed))
    inference = data.labels != "training"
    assert set(np.unique(data.frame.loc[inference, "f"])) <= {0.0, 1.0}
    prob = data.frame.loc[inference, "f_prob"]
    assert ((prob >= 0) & (prob <= 1)).all()


@pytest.mark.parametrize(
    "field, value",
    [("n_labeled", 5), ("n_training", 9), ("sigma_y", 0.0), ("sigma_y", -1.0), ("model", "probit")],
)
def test_invalid_configuration_is_rejected(field, value):
    with pytest.raises(ValidationError):
        SimConfig(**{field: value})


# ────────────────────────────────────────────────────────────────────────────
# Prediction model
# ────────────────────────────────────────────────────────────────────────────
def test_noiseless_truth_is_fitted_exactly():
    X = np.random.default_rng(5).standard_normal((100, 4))
    y = X[:, 0] + X[:, 1] ** 2 / 2 + X[:, 2] ** 3 / 3 + X[:, 3] ** 2 / 4
    model = train_prediction_model(X, y)
    resid = y - model(X)
    r2 = 1.0 - resid @ resid / np.sum((y - y.mean()) ** 2)
    assert r2 >= 0.999


def test_predictor_at_origin_is_intercept():
    X = np.random.default_rng(6).standard_normal((50, 4))
    y = 2.0 + X[:, 0] + np.random.default_rng(7).normal(size=50)
    model = train_prediction_model(X, y)
    assert model(np.zeros((1, 4)))[0] == pytest.approx(model.coefficients[0])


def test_basis_layout():
    B = polynomial_basis(np.array([[1.0, 2.0, 3.0, 4.0]]))
    np.testing.assert_allclose(B[0], [1, 1, 2, 4, 3, 9, 27, 4, 16])


def test_too_few_training_rows():
    with pytest.raises(ValueError):
        train_prediction_model(np.zeros((5, 4)), np.zeros(5))


# ────────────────────────────────────────────────────────────────────────────
# Monte Carlo envelopes
# ────────────────────────────────────────────────────────────────────────────
@pytest.mark.slow
def test_prediction_correlation_envelope():
    rhos = []
    for seed in range(200):
        data = simdat(SimConfig(seed=seed))
        unlabeled = data.frame[data.labels == "unlabeled"]
        rhos.append(np.corrcoef(unlabeled["f"], unlabeled["Y"])[0, 1])
    rhos = np.array(rhos)
    assert np.all(rhos > 0.0)
    assert 0.3 <= rhos.mean() <= 0.9


@pytest.mark.slow
def test_oracle_coverage_near_nominal():
    formula = parse_formula("Y - f ~ X1")
    config = make_config(method="oracle", estimand="ols")
    covered = 0
    for seed in range(200):
        fit = fit_ipd(formula, simdat(SimConfig(seed=seed)), config)
        covered += fit.ci_lower[1] <= 1.0 <= fit.ci_upper[1]
    # binomial sd at 200 draws is about 0.015
    assert 0.90 <= covered / 200 <= 0.99


def test_split_of_simulated_data(sim_split):
    assert (sim_split.n, sim_split.N) == (100, 1000)
