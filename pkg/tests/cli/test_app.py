"""Tests for the starch command-line dispatcher and its subcommands."""

import json

import pytest

from src.cli.app import EXIT_DATA, EXIT_OK, EXIT_USAGE, run
from src.config.settings import settings
from src.spatial.weights import build_queen_contiguity, save_weights
from src.utils.jsonio import json_load


@pytest.fixture
def dgp_file(tmp_path):
    """A small DgpConfig JSON file."""
    path = tmp_path / "dgp.json"
    path.write_text(
        json.dumps(
            {
                "spec": {"p": 1, "k": 2},
                "theta": {"rho": [0.2], "gamma": 0.2, "delta": [-0.2], "beta": [0.5, 1.0]},
                "weights": {"kind": "queen", "side": 5},
                "T": 10,
                "burn_in": 20,
                "seed": 99,
            }
        ),
        encoding="utf-8",
    )
    return path


@pytest.fixture
def simulated_dir(dgp_file, tmp_path):
    """Output directory of a successful simulate run."""
    out = tmp_path / "sim"
    assert run(["simulate", str(dgp_file), "--out", str(out)]) == EXIT_OK
    return out


class TestSimulateCommand:
    """Tests for the simulate subcommand."""

    def test_writes_outputs(self, simulated_dir):
        """When the config is valid, writes the panel, weights, truth and manifest."""
        for name in ("panel.csv", "weights.txt", "truth.json", "manifest.json"):
            assert (simulated_dir / name).exists()
        manifest = json_load(simulated_dir / "manifest.json")
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == 99
        assert len(manifest["config_hash"]) == 64

    def test_seed_override(self, dgp_file, tmp_path):
        """When --seed is given, the manifest records it."""
        out = tmp_path / "sim"

        assert run(["simulate", str(dgp_file), "--seed", "5", "--out", str(out)]) == EXIT_OK
        assert json_load(out / "manifest.json")["seed"] == 5

    def test_missing_seed(self, dgp_file, tmp_path, capsys):
        """When the config has no seed, exits 1 naming the field."""
        raw = json.loads(dgp_file.read_text(encoding="utf-8"))
        del raw["seed"]
        dgp_file.write_text(json.dumps(raw), encoding="utf-8")

        code = run(["simulate", str(dgp_file), "--out", str(tmp_path / "sim")])

        assert code == EXIT_USAGE
        assert "seed" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        """When the file is not JSON, exits 1 with the line and column."""
        path = tmp_path / "bad.json"
        path.write_text('{"T": 8,\n  oops}', encoding="utf-8")

        code = run(["simulate", str(path)])

        assert code == EXIT_USAGE
        assert "line 2" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        """When the config file does not exist, exits 2."""
        assert run(["simulate", str(tmp_path / "absent.json")]) == EXIT_DATA


class TestEstimateCommand:
    """Tests for the estimate subcommand."""

    def test_two_stage_least_squares(self, simulated_dir, tmp_path, capsys):
        """When the panel and weights match, writes the fit files."""
        out = tmp_path / "fit"

        code = run(
            [
                "estimate",
                str(simulated_dir / "panel.csv"),
                str(simulated_dir / "weights.txt"),
                "--stage", "2sls",
                "--no-diagnostics",
                "--out", str(out),
            ]
        )

        assert code == EXIT_OK
        report = json_load(out / "fit.json")
        assert report["stage"] == "2sls"
        assert [p["name"] for p in report["parameters"]] == ["rho", "gamma", "delta", "beta_0", "beta_1"]
        assert report["regressors"] == ["x1", "x2"]
        assert (out / "estimates.csv").exists()
        assert "Stage: 2sls" in capsys.readouterr().out

    def test_best_with_diagnostics(self, simulated_dir, tmp_path, monkeypatch):
        """When diagnostics run, residual tables are written next to the fit."""
        monkeypatch.setattr(settings, "moran_permutations", 19)
        out = tmp_path / "fit"

        code = run(
            ["estimate", str(simulated_dir / "panel.csv"), str(simulated_dir / "weights.txt"), "--out", str(out)]
        )

        assert code == EXIT_OK
        assert (out / "residual_acf.csv").exists()
        assert (out / "residual_moran.csv").exists()
        assert json_load(out / "fit.json")["diagnostics"]["permutations"] == 19

    def test_weights_size_mismatch(self, simulated_dir, tmp_path, capsys):
        """When the weights cover a different n, exits 2."""
        other = save_weights(build_queen_contiguity(3), tmp_path / "w9.txt")

        code = run(["estimate", str(simulated_dir / "panel.csv"), str(other), "--out", str(tmp_path / "fit")])

        assert code == EXIT_DATA
        assert "n=9" in capsys.readouterr().err

    def test_unknown_stage(self, simulated_dir):
        """When the stage is not a choice, exits 1."""
        code = run(
            ["estimate", str(simulated_dir / "panel.csv"), str(simulated_dir / "weights.txt"), "--stage", "third"]
        )

        assert code == EXIT_USAGE


class TestDiagnoseCommand:
    """Tests for the diagnose subcommand."""

    def test_refits_without_fit_file(self, simulated_dir, tmp_path):
        """When no fit file is given, refits and writes every table."""
        out = tmp_path / "diag"

        code = run(
            [
                "diagnose",
                str(simulated_dir / "panel.csv"),
                str(simulated_dir / "weights.txt"),
                "--stage", "2sls",
                "--lags", "2",
                "--permutations", "19",
                "--out", str(out),
            ]
        )

        assert code == EXIT_OK
        for name in (
            "residual_acf.csv",
            "residual_moran.csv",
            "outcome_acf.csv",
            "outcome_st_moran.csv",
            "volatility_by_location.csv",
            "volatility_by_period.csv",
            "diagnostics.json",
        ):
            assert (out / name).exists()
        assert json_load(out / "diagnostics.json")["lags"] == 2


class TestMontecarloCommand:
    """Tests for the montecarlo subcommand."""

    def test_config_file(self, tmp_path):
        """When given a small config, writes the tables and the result summary."""
        config = tmp_path / "exp.json"
        config.write_text(
            json.dumps({"design": "M1", "side": 4, "T": 6, "replications": 2, "stage": "2sls", "seed": 3}),
            encoding="utf-8",
        )
        out = tmp_path / "mc"

        assert run(["montecarlo", str(config), "--out", str(out)]) == EXIT_OK
        result = json_load(out / "result.json")
        assert result["successes"] == 2
        assert result["labels"] == ["rho", "gamma", "delta", "beta_0", "beta_1"]
        assert (out / "table.txt").read_text(encoding="utf-8").strip()

    def test_unknown_preset(self, capsys):
        """When the preset is unknown, exits 1 listing valid presets."""
        code = run(["montecarlo", "--preset", "table-z9"])

        assert code == EXIT_USAGE
        assert "table-a1-gaussian-small" in capsys.readouterr().err

    def test_needs_exactly_one_source(self):
        """When neither a config nor a preset is given, exits 1."""
        assert run(["montecarlo"]) == EXIT_USAGE


def test_no_command():
    """Running without a subcommand is a usage error."""
    assert run([]) == EXIT_USAGE
