import json
import os

import pandas as pd
from click.testing import CliRunner

from src import __version__
from src.harness.cli import EXIT_ERROR, cli


def _run(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


def test_version():
    result = _run("--version")
    assert result.exit_code == 0
    assert __version__ in result.output


class TestRun:
    def test_run_summarize_plot(self, smoke_doc, write_config, tmp_path):
        smoke_doc["trials"] = 1
        path = write_config(smoke_doc)
        out = tmp_path / "cli_run"

        result = _run("run", path, "--out", out, "--threads", 2)
        assert result.exit_code == 0, result.output
        assert "Saved summary" in result.output
        assert "NT-KLMS-GQ" in result.output

        os.remove(out / "summary.csv")
        result = _run("summarize", out)
        assert result.exit_code == 0, result.output
        summary = pd.read_csv(out / "summary.csv")
        assert len(summary) == 10
        assert (summary["status"] == "single_trial").all()

        figs = tmp_path / "figs"
        result = _run("plot", out, "--fig-dir", figs)
        assert result.exit_code == 0, result.output
        assert (figs / "cli_run_learning_curves.png").exists()
        with open(out / "manifest.json") as f:
            chash = json.load(f)["config_hash"]
        assert f"config_hash={chash}".encode() in (figs / "cli_run_learning_curves.png").read_bytes()

    def test_trials_override(self, smoke_doc, write_config, tmp_path):
        out = tmp_path / "override"
        result = _run("run", write_config(smoke_doc), "--out", out, "--trials", 1, "--seed", 5)
        assert result.exit_code == 0, result.output
        trials = pd.read_csv(out / "trials.csv")
        assert trials["trial"].unique().tolist() == [0]
        with open(out / "config.json") as f:
            assert json.load(f)["seed"] == 5

    def test_timing_report(self, smoke_doc, write_config, tmp_path):
        smoke_doc.update(trials=1, timing=True, snr_db=[None])
        out = tmp_path / "timed"
        assert _run("run", write_config(smoke_doc), "--out", out).exit_code == 0
        os.remove(out / "timing_report.csv")

        result = _run("timing", out)
        assert result.exit_code == 0, result.output
        assert "late_early_ratio" in result.output
        assert (out / "timing_report.csv").exists()


class TestErrors:
    def test_invalid_config_is_json_on_stderr(self, smoke_doc, write_config):
        del smoke_doc["sigma"]
        result = _run("run", write_config(smoke_doc))
        assert result.exit_code == EXIT_ERROR
        payload = json.loads(result.stderr.strip().splitlines()[-1])
        assert payload["error"] == "ConfigError"
        assert "sigma" in payload["message"]

    def test_summarize_outside_run_dir(self, tmp_path):
        result = _run("summarize", tmp_path)
        assert result.exit_code == EXIT_ERROR
        assert json.loads(result.stderr.strip().splitlines()[-1])["error"] == "ConfigError"

    def test_plot_with_nothing_to_draw(self, tmp_path):
        result = _run("plot", tmp_path, "--fig-dir", tmp_path / "figs")
        assert result.exit_code == EXIT_ERROR


def test_spectra_command(smoke_doc, write_config, tmp_path):
    smoke_doc["spectra"] = {"points": 20, "trials": 3, "maps": [{"name": "TS", "features": "ts", "degree": 1}]}
    out = tmp_path / "spectra"
    result = _run("spectra", write_config(smoke_doc), "--out", out, "--trials", 1)
    assert result.exit_code == 0, result.output
    with open(out / "manifest.json") as f:
        assert json.load(f)["spectra_trials"] == 1
    assert len(pd.read_csv(out / "spectra.csv")) == 20
