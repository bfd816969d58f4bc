"""Harness contracts: config round-trips, reports, determinism, exit codes."""

import json
from pathlib import Path

import pytest

from cable_clt import cli
from cable_clt.harness import (
    EXIT_CONFIG_ERROR,
    EXIT_PASS,
    Check,
    ExperimentConfig,
    RunManifest,
    emit_report,
    run_experiment,
)
from cable_clt.model import ConfigurationError

SMALL_VARIANCE = ExperimentConfig(
    experiment="variance-scan",
    alpha=0.5, beta=1.0, sigma1=0.0, sigma0=1.0,
    l_values=(8.0,), times=(0.5,), horizon=0.5,
    n_rep=400, seed=7, dx=0.1,
)


class TestConfig:
    def test_round_trip_identity(self):
        cfg = ExperimentConfig(
            experiment="clt-scan", alpha=-0.25, beta=2.0,
            l_values=(4.0, 16.0), times=(0.5, 1.0), n_rep=123, seed=99,
            tol=3.5e-9, sigma1=0.125, sigma0=-1.5,
        )
        assert ExperimentConfig.from_text(cfg.to_text()) == cfg

    def test_comments_and_spacing_tolerated(self):
        cfg = ExperimentConfig.from_text(
            "experiment = kernel-check\n"
            "# a comment\n"
            "alpha = 0.5   # trailing comment\n"
            "l_values = 4, 16\n"
        )
        assert cfg.alpha == 0.5
        assert cfg.l_values == (4.0, 16.0)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_text("experiment = kernel-check\nbogus = 1\n")

    def test_missing_experiment_rejected(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_text("alpha = 1\n")

    def test_unknown_experiment_rejected(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(experiment="nonsense")

    def test_hash_tracks_content(self):
        a = SMALL_VARIANCE
        b = ExperimentConfig.from_text(a.to_text())
        assert a.config_hash() == b.config_hash()
        import dataclasses
        c = dataclasses.replace(a, seed=8)
        assert a.config_hash() != c.config_hash()


def _toy_manifest() -> RunManifest:
    man = RunManifest(experiment="fclt-compare", config_hash="ab" * 32,
                      code_version="0.1.0", created_utc="2026-01-01T00:00:00Z")
    man.add(Check(name="covariance-discrepancy", claim="Theorem 2: functional limit",
                  value=1.25, threshold=3.0, passed=True))
    man.add(Check(name="energy-distance-p", claim="Theorem 2: functional limit",
                  value=0.312, threshold=0.01, passed=True))
    return man


class TestReports:
    def test_json_csv_round_trip_preserves_floats(self):
        man = _toy_manifest()
        man.checks[0].value = 0.1 + 0.2  # not exactly representable in decimal
        parsed = json.loads(emit_report(man, "json"))
        assert parsed["checks"][0]["value"] == man.checks[0].value
        csv_text = emit_report(man, "csv")
        row = csv_text.splitlines()[1].split(",")
        assert float(row[3]) == man.checks[0].value

    def test_markdown_cites_the_theorem(self):
        md = emit_report(_toy_manifest(), "markdown-summary")
        rows = [ln for ln in md.splitlines() if ln.startswith("| ")]
        assert all("Theorem 2" in r for r in rows[1:])

    def test_unknown_format_rejected(self):
        with pytest.raises(ConfigurationError):
            emit_report(_toy_manifest(), "yaml")

    def test_empty_manifest_rejected(self):
        empty = RunManifest(experiment="kernel-check", config_hash="x",
                            code_version="0", created_utc="t")
        with pytest.raises(ConfigurationError):
            emit_report(empty, "json")


class TestRunExperiment:
    def test_writes_outputs_and_passes(self, tmp_path):
        man = run_experiment(SMALL_VARIANCE, out_dir=tmp_path)
        assert man.passed
        for name in ("manifest.json", "samples.csv", "summary.csv"):
            assert (tmp_path / name).exists()
        header = (tmp_path / "samples.csv").read_text().splitlines()[0]
        assert header == "experiment,L,t,replicate,value"

    def test_sample_files_byte_identical(self, tmp_path):
        run_experiment(SMALL_VARIANCE, out_dir=tmp_path / "a")
        run_experiment(SMALL_VARIANCE, out_dir=tmp_path / "b")
        assert ((tmp_path / "a" / "samples.csv").read_bytes()
                == (tmp_path / "b" / "samples.csv").read_bytes())
        assert ((tmp_path / "a" / "summary.csv").read_bytes()
                == (tmp_path / "b" / "summary.csv").read_bytes())

    def test_parallelism_does_not_change_samples(self, tmp_path):
        import dataclasses
        run_experiment(SMALL_VARIANCE, out_dir=tmp_path / "serial")
        par = dataclasses.replace(SMALL_VARIANCE, n_jobs=2)
        run_experiment(par, out_dir=tmp_path / "parallel")
        assert ((tmp_path / "serial" / "samples.csv").read_bytes()
                == (tmp_path / "parallel" / "samples.csv").read_bytes())

    def test_invalid_config_fails_fast(self, tmp_path):
        import dataclasses
        bad = dataclasses.replace(SMALL_VARIANCE, times=(2.0,))  # beyond horizon
        with pytest.raises(ConfigurationError):
            run_experiment(bad, out_dir=tmp_path)
        assert not (tmp_path / "samples.csv").exists()

    def test_env_var_sets_default_output(self, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("CABLE_CLT_OUT", str(target))
        run_experiment(SMALL_VARIANCE)
        assert (target / "manifest.json").exists()


class TestCli:
    def _write_config(self, tmp_path: Path) -> Path:
        path = tmp_path / "cfg.txt"
        path.write_text(SMALL_VARIANCE.to_text(), encoding="utf-8")
        return path

    def test_pass_run(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path)
        code = cli.main(["variance-scan", "--config", str(cfg),
                         "--out", str(tmp_path / "out"),
                         "--format", "markdown-summary"])
        assert code == EXIT_PASS
        assert (tmp_path / "out" / "report.md").exists()
        out = capsys.readouterr().out
        assert "variance-scan: PASS" in out

    def test_overrides(self, tmp_path):
        cfg = self._write_config(tmp_path)
        code = cli.main(["variance-scan", "--config", str(cfg),
                         "--seed", "13", "--reps", "300",
                         "--out", str(tmp_path / "out")])
        assert code == EXIT_PASS
        samples = (tmp_path / "out" / "samples.csv").read_text().splitlines()
        assert len(samples) == 1 + 300

    def test_config_error_exit_code(self, tmp_path):
        cfg = tmp_path / "bad.txt"
        cfg.write_text("experiment = variance-scan\nbeta = -1\n")
        assert cli.main(["variance-scan", "--config", str(cfg)]) == EXIT_CONFIG_ERROR

    def test_missing_config_exit_code(self, tmp_path):
        assert cli.main(["variance-scan", "--config",
                         str(tmp_path / "nope.txt")]) == EXIT_CONFIG_ERROR
