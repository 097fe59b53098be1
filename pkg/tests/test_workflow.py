# tests/test_workflow.py

import json
from pathlib import Path

import pandas as pd
import pytest

from src.dataset import parse_formula, split
from src.errors import ConfigurationError, UnsupportedCombinationError
from src.main import main
from src.simdat import SimConfig, simdat
from src.workflows import METHODS, fit_ipd, make_config


# ────────────────────────────────────────────────────────────────────────────
# Library dispatch
# ────────────────────────────────────────────────────────────────────────────
def test_every_method_runs_on_simulated_data(sim_ols):
    formula = parse_formula("Y - f ~ X1")
    for method in METHODS:
        fit = fit_ipd(formula, sim_ols, make_config(method=method, estimand="ols", nboot=20))
        assert fit.method == method
        assert fit.terms == ("(Intercept)", "X1")


def test_unknown_method_lists_valid_tags(sim_ols):
    with pytest.raises(ConfigurationError, match="ppi_plusplus"):
        fit_ipd(parse_formula("Y - f ~ X1"), sim_ols, make_config(method="banana", estimand="ols"))


def test_unknown_estimand(sim_ols):
    with pytest.raises(ConfigurationError, match="estimand"):
        fit_ipd(parse_formula("Y - f ~ X1"), sim_ols, make_config(method="ppi", estimand="median"))


def test_postpi_mean_is_unsupported(sim_ols):
    with pytest.raises(UnsupportedCombinationError):
        fit_ipd(parse_formula("Y - f ~ 1"), sim_ols, make_config(method="postpi_boot", estimand="mean"))


def test_bad_option_is_a_configuration_error():
    with pytest.raises(ConfigurationError, match="alpha"):
        make_config(method="ppi", estimand="ols", alpha=1.5)
    with pytest.raises(ConfigurationError, match="q"):
        make_config(method="ppi", estimand="quantile")


def test_pair_of_frames_matches_stacked_input(sim_ols, sim_split):
    formula = parse_formula("Y - f ~ X1")
    config = make_config(method="ppi", estimand="ols")
    labeled = sim_split.labeled.drop(columns="set")
    unlabeled = sim_split.unlabeled.drop(columns=["set", "Y"])
    from_pair = fit_ipd(formula, (labeled, unlabeled), config)
    from_stack = fit_ipd(formula, sim_ols, config)
    assert from_pair.estimates.tolist() == pytest.approx(from_stack.estimates.tolist(), abs=1e-12)


# ────────────────────────────────────────────────────────────────────────────
# CLI
# ────────────────────────────────────────────────────────────────────────────
def _run(argv):
    with pytest.raises(SystemExit) as excinfo:
        main(["--quiet", *argv])
    return excinfo.value.code


def _error(capsys) -> dict:
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])["error"]


@pytest.fixture()
def dataset(tmp_path, capsys) -> Path:
    out = tmp_path / "d.csv"
    code = _run(["simulate", "--n", "100,100,1000", "--effect", "1", "--sigma-y", "4",
                 "--model", "ols", "--seed", "42", "--out", str(out)])
    assert code == 0
    capsys.readouterr()
    return out


def test_cli_simulate_writes_rows(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert _run(["simulate", "--seed", "42", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["rows"] == 1200
    assert (summary["training"], summary["labeled"], summary["unlabeled"]) == (100, 100, 1000)
    assert len(pd.read_csv(out)) == 1200


def test_cli_simulate_requires_seed(tmp_path):
    assert _run(["simulate", "--out", str(tmp_path / "d.csv")]) == 2


def test_cli_simulate_rejects_small_sets(tmp_path, capsys):
    assert _run(["simulate", "--n", "5,5,5", "--seed", "1", "--out", str(tmp_path / "d.csv")]) == 2
    assert _error(capsys)["type"] == "ConfigurationError"


def test_cli_fit_json(dataset, capsys):
    code = _run(["fit", "--formula", "Y - f ~ X1", "--method", "ppi", "--model", "ols",
                 "--data", str(dataset), "--label", "set", "--seed", "42"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert [row["term"] for row in payload["tidy"]] == ["(Intercept)", "X1"]
    assert payload["glance"]["method"] == "ppi"


def test_cli_fit_scalar_estimand(dataset, capsys):
    code = _run(["fit", "--formula", "Y - f ~ 1", "--method", "pspa", "--model", "mean",
                 "--data", str(dataset), "--seed", "1"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["tidy"]) == 1
    assert payload["tidy"][0]["term"] == "mean"


def test_cli_fit_summary_format(dataset, capsys):
    code = _run(["fit", "--formula", "Y - f ~ X1", "--method", "ppi_plusplus", "--model", "ols",
                 "--data", str(dataset), "--seed", "1", "--format", "summary"])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("Method:   ppi_plusplus")
    assert "lambda_hat" in out


@pytest.mark.parametrize(
    "extra, code",
    [
        (["--alpha", "1.5"], 2),
        (["--method", "banana"], 2),
    ],
)
def test_cli_fit_usage_errors(dataset, capsys, extra, code):
    argv = ["fit", "--formula", "Y - f ~ X1", "--method", "ppi", "--model", "ols",
            "--data", str(dataset), "--seed", "1", *extra]
    assert _run(argv) == code
    assert _error(capsys)["type"] == "ConfigurationError"


def test_cli_fit_missing_file(tmp_path, capsys):
    code = _run(["fit", "--formula", "Y - f ~ X1", "--method", "ppi", "--model", "ols",
                 "--data", str(tmp_path / "nope.csv"), "--seed", "1"])
    assert code == 3
    assert "not found" in _error(capsys)["message"]


def test_cli_fit_labeled_outcome_missing(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("set,Y,f,X1\nlabeled,1,1,0\nlabeled,NA,2,1\nunlabeled,,3,2\nunlabeled,,4,3\n")
    code = _run(["fit", "--formula", "Y - f ~ X1", "--method", "ppi", "--model", "ols",
                 "--data", str(bad), "--seed", "1"])
    assert code == 3
    assert _error(capsys)["type"] == "DataValidationError"


def test_cli_fit_degenerate_predictions_is_numerical(tmp_path, capsys):
    data = simdat(SimConfig(seed=3)).frame.copy()
    data.loc[data["set"] != "training", "f"] = 1.0
    path = tmp_path / "flat.csv"
    data.to_csv(path, index=False)
    code = _run(["fit", "--formula", "Y - f ~ X1", "--method", "postpi_boot", "--model", "ols",
                 "--data", str(path), "--seed", "1", "--nboot", "10"])
    assert code == 4
    assert _error(capsys)["type"] == "DegeneratePredictionsError"


def test_cli_fit_separate_files(tmp_path, capsys):
    rows = split(simdat(SimConfig(seed=5)))
    labeled, unlabeled = tmp_path / "l.csv", tmp_path / "u.csv"
    rows.labeled.drop(columns="set").to_csv(labeled, index=False)
    rows.unlabeled.drop(columns=["set", "Y"]).to_csv(unlabeled, index=False)
    code = _run(["fit", "--formula", "Y - f ~ X1", "--method", "ppi", "--model", "ols",
                 "--labeled", str(labeled), "--unlabeled", str(unlabeled), "--seed", "1"])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["glance"]["n_unlabeled"] == 1000


def test_cli_benchmark_writes_report(tmp_path, capsys):
    report, long = tmp_path / "study.csv", tmp_path / "long.csv"
    code = _run(["benchmark", "--n", "20,30,60", "--replicates", "3", "--seed", "7",
                 "--methods", "oracle,classic,ppi", "--out", str(report), "--long-out", str(long)])
    assert code == 0
    frame = pd.read_csv(report)
    assert frame["method"].tolist() == ["oracle", "classic", "ppi"]
    assert (frame["replicates"] + frame["failures"] == 3).all()
    assert len(pd.read_csv(long)) == int(frame["replicates"].sum())


def test_cli_benchmark_report_is_identical_across_worker_counts(tmp_path):
    written = {}
    for jobs in ("1", "4"):
        report, long = tmp_path / f"study{jobs}.csv", tmp_path / f"long{jobs}.csv"
        code = _run(["benchmark", "--n", "20,30,60", "--replicates", "6", "--seed", "11",
                     "--methods", "oracle,naive,classic,postpi_boot,ppi,ppi_plusplus,pspa",
                     "--nboot", "10", "--jobs", jobs, "--out", str(report), "--long-out", str(long)])
        assert code == 0
        written[jobs] = (report.read_bytes(), long.read_bytes())
    assert written["1"] == written["4"]


def test_cli_benchmark_to_stdout(capsys):
    code = _run(["benchmark", "--n", "20,30,60", "--replicates", "2", "--seed", "7",
                 "--methods", "classic"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("method,replicates,failures,coverage")
    assert out[1].startswith("classic,")


def test_cli_benchmark_rejects_one_replicate(capsys):
    assert _run(["benchmark", "--replicates", "1", "--seed", "7"]) == 2
