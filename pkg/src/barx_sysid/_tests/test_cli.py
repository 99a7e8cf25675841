import json

import numpy as np
import pandas as pd
import pytest

from barx_sysid import __version__
from barx_sysid._cli import (
    EXIT_BAD_INPUT,
    EXIT_OK,
    _apply_thread_cap,
    run_pipeline,
)
from barx_sysid.libs import HmcConfig

TINY_SETTINGS = {
    "n_a": 2,
    "n_b": 3,
    "n_e": 2,
    "n_iterations": 80,
    "n_warmup": 40,
    "n_chains": 2,
    "max_tree_depth": 4,
}


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "data.csv"
    code = run_pipeline(
        ["simulate", "--experiment", "1", "--T", "150", "--seed", "3", "--out", str(path)]
    )
    assert code == EXIT_OK
    return path


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_SETTINGS))
    return path


@pytest.fixture
def run_dir(tmp_path, dataset, config):
    out = tmp_path / "run"
    code = run_pipeline(
        [
            "fit", "--data", str(dataset), "--config", str(config),
            "--seed", "5", "--split", "0.6667", "--out", str(out),
        ]
    )
    assert code == EXIT_OK
    return out


def test_simulate_is_byte_identical(tmp_path, dataset):
    again = tmp_path / "again.csv"
    run_pipeline(
        ["simulate", "--experiment", "1", "--T", "150", "--seed", "3", "--out", str(again)]
    )
    assert again.read_bytes() == dataset.read_bytes()
    assert (tmp_path / "again.meta.json").read_bytes() == (
        tmp_path / "data.meta.json"
    ).read_bytes()
    assert pd.read_csv(dataset).columns.tolist() == ["y", "u"]


def test_simulate_rejects_noise_scale_for_experiment2(tmp_path):
    code = run_pipeline(
        [
            "simulate", "--experiment", "2", "--seed", "1",
            "--noise-scale", "0.5", "--out", str(tmp_path / "d.csv"),
        ]
    )
    assert code == EXIT_BAD_INPUT


def test_fit_writes_summary(run_dir):
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["version"] == __version__
    assert summary["rng"]["seed"] == 5
    assert summary["settings"]["sampler"]["n_iterations"] == 80
    assert summary["data"]["n_estimation"] == 100
    assert [row["parameter"] for row in summary["coefficients"]] == [
        "a1", "a2", "b1", "b2", "b3",
    ]
    lines = (run_dir / "draws.ndjson").read_text().splitlines()
    assert len(lines) == 2 * 40


def test_fit_without_input_column_is_rejected(tmp_path, config):
    data = tmp_path / "y_only.csv"
    data.write_text("y\n" + "\n".join(str(0.1 * k) for k in range(60)) + "\n")
    code = run_pipeline(
        ["fit", "--data", str(data), "--config", str(config), "--seed", "1",
         "--out", str(tmp_path / "run")]
    )
    assert code == EXIT_BAD_INPUT
    assert not (tmp_path / "run" / "draws.ndjson").exists()


def test_fit_rejects_unknown_settings(tmp_path, dataset):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n_a": 2, "leapfrogs": 3}))
    code = run_pipeline(
        ["fit", "--data", str(dataset), "--config", str(bad), "--out", str(tmp_path / "r")]
    )
    assert code == EXIT_BAD_INPUT


def test_missing_data_file(tmp_path, config):
    code = run_pipeline(
        ["fit", "--data", str(tmp_path / "nope.csv"), "--config", str(config),
         "--out", str(tmp_path / "r")]
    )
    assert code == EXIT_BAD_INPUT


def test_predict_and_report(tmp_path, dataset, run_dir, capsys):
    outputs = []
    for name in ("pred", "pred_again"):
        out = tmp_path / name
        code = run_pipeline(
            [
                "predict", "--run", str(run_dir), "--data", str(dataset),
                "--grid-points", "401", "--save-densities", "100,120",
                "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        outputs.append(out)

    for name in ("predictive.csv", "noise_density.csv", "metrics.json"):
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()

    table = pd.read_csv(outputs[0] / "predictive.csv")
    assert table.columns.tolist() == ["t", "y", "mean", "hpd", "baseline"]
    assert table["t"].tolist() == list(range(100, 150))
    densities = pd.read_csv(outputs[0] / "predictive_density.csv")
    assert densities.columns.tolist() == ["grid", "t100", "t120"]
    assert len(densities) == 401

    metrics = json.loads((outputs[0] / "metrics.json").read_text())
    assert metrics["n_validation"] == 50
    assert metrics["split"] == pytest.approx(0.6667)
    assert 0.0 <= metrics["hpd"]["empirical_coverage"] <= 1.0
    assert set(metrics["model_fit"]) == {"barx", "baseline"}

    capsys.readouterr()
    assert run_pipeline(["report", "--run", str(run_dir), "--pred", str(outputs[0])]) == 0
    printed = capsys.readouterr().out
    assert "seed: 5" in printed
    assert "MF BARX" in printed
    assert "a1" in printed and "rhat" in printed


def test_predict_needs_a_split(tmp_path, dataset, config):
    out = tmp_path / "full"
    assert run_pipeline(
        ["fit", "--data", str(dataset), "--config", str(config), "--seed", "2",
         "--out", str(out)]
    ) == EXIT_OK
    code = run_pipeline(
        ["predict", "--run", str(out), "--data", str(dataset), "--out", str(tmp_path / "p")]
    )
    assert code == EXIT_BAD_INPUT


def test_thread_cap_from_environment(monkeypatch):
    monkeypatch.setenv("BARX_THREADS", "1")
    assert _apply_thread_cap(HmcConfig()).max_workers == 1
    assert _apply_thread_cap(HmcConfig(max_workers=3)).max_workers == 3
    monkeypatch.setenv("BARX_THREADS", "many")
    with pytest.raises(ValueError, match="BARX_THREADS"):
        _apply_thread_cap(HmcConfig())
    monkeypatch.delenv("BARX_THREADS")
    assert _apply_thread_cap(HmcConfig()).max_workers is None


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        run_pipeline(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_output_only_series_runs_end_to_end(tmp_path):
    rng = np.random.default_rng(0)
    y = np.zeros(200)
    for t in range(2, 200):
        y[t] = 1.2 * y[t - 1] - 0.5 * y[t - 2] + rng.standard_normal()
    data = tmp_path / "signal.csv"
    pd.DataFrame({"y": y}).to_csv(data, index=False)
    config = tmp_path / "ar.json"
    config.write_text(json.dumps({**TINY_SETTINGS, "n_a": 10, "n_b": 0}))

    run = tmp_path / "run"
    assert run_pipeline(
        ["fit", "--data", str(data), "--config", str(config), "--seed", "4",
         "--split", "0.5", "--out", str(run)]
    ) == EXIT_OK
    assert run_pipeline(
        ["predict", "--run", str(run), "--data", str(data), "--grid-points", "301",
         "--out", str(tmp_path / "pred")]
    ) == EXIT_OK
    metrics = json.loads((tmp_path / "pred" / "metrics.json").read_text())
    assert metrics["baseline"]["n_b"] == 0
    assert metrics["n_validation"] == 100


def test_report_shows_model_fit_only_with_predictions(tmp_path, dataset, run_dir, capsys):
    pred = tmp_path / "pred"
    code = run_pipeline(
        ["predict", "--run", str(run_dir), "--data", str(dataset), "--out", str(pred)]
    )
    assert code == EXIT_OK

    capsys.readouterr()
    assert run_pipeline(["report", "--run", str(run_dir)]) == EXIT_OK
    without = capsys.readouterr().out
    assert "divergences" in without
    assert "MF BARX" not in without

    assert run_pipeline(["report", "--run", str(run_dir), "--pred", str(pred)]) == EXIT_OK
    with_predictions = capsys.readouterr().out
    assert "MF BARX" in with_predictions and "MF baseline" in with_predictions


def test_fit_draws_are_byte_identical(tmp_path, dataset, config, run_dir, monkeypatch):
    def fit(name):
        out = tmp_path / name
        code = run_pipeline(
            [
                "fit", "--data", str(dataset), "--config", str(config),
                "--seed", "5", "--split", "0.6667", "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        return (out / "draws.ndjson").read_bytes()

    monkeypatch.delenv("BARX_THREADS", raising=False)
    parallel = fit("again")
    assert parallel == (run_dir / "draws.ndjson").read_bytes()

    monkeypatch.setenv("BARX_THREADS", "1")
    assert fit("serial") == parallel
