# src/harness/cli.py
"""
Command line entry point.

    python -m src.harness.cli run data/configs/table1.json --trials 50 --threads 4
    python -m src.harness.cli summarize data/results/table1
    python -m src.harness.cli timing data/results/table1
    python -m src.harness.cli spectra data/configs/spectra.json
    python -m src.harness.cli sigma-search data/configs/table1.json
    python -m src.harness.cli plot data/results/table1

Library errors exit with status 2 and one JSON line on stderr.
"""

import functools
import json
import os
from dataclasses import replace

import click
import pandas as pd

from src import __version__
from src.analysis.summarize import format_table, summarize, timing_report
from src.errors import ConfigError, KafError
from src.harness.config import load_config
from src.harness.experiment import SIGMA_SEARCH_TRIALS, run_experiment, run_spectra, sigma_search
from src.log import configure
from src.visualization.eigenspectrum_plot import plot_eigenspectra
from src.visualization.learning_curves import FIG_DIR, plot_learning_curves

EXIT_ERROR = 2


def reports_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except KafError as exc:
            click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc)}), err=True)
            raise SystemExit(EXIT_ERROR) from exc

    return wrapper


def config_options(fn):
    for option in reversed([
        click.option("--seed", type=int, default=None, help="Master seed (overrides the config)."),
        click.option("--trials", type=click.IntRange(min=1), default=None, help="Number of trials."),
        click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None, help="Output directory."),
        click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads."),
    ]):
        fn = option(fn)
    return fn


def _read_csv(run_dir, name):
    path = os.path.join(run_dir, name)
    if not os.path.exists(path):
        raise ConfigError(f"{path} not found; is {run_dir} a run directory?")
    return pd.read_csv(path)


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def cli(verbose):
    """No-trick kernel adaptive filtering benchmarks on Mackey-Glass."""
    configure(verbose)


@cli.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@config_options
@reports_errors
def run(config_path, seed, trials, output_dir, threads):
    """Run the experiment described by CONFIG_PATH."""
    config = load_config(config_path, seed=seed, trials=trials, output_dir=output_dir, threads=threads)
    result = run_experiment(config)
    for name, path in result.paths.items():
        click.echo(f"Saved {name} to {path}")
    table = pd.read_csv(result.paths["summary"])
    click.echo(format_table(table).to_string())


@cli.command("summarize")
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@reports_errors
def summarize_cmd(run_dir):
    """Rebuild summary.csv from RUN_DIR/trials.csv and print the MSE table."""
    trials = _read_csv(run_dir, "trials.csv")
    cells = list(dict.fromkeys(zip(trials["algorithm"], trials["snr_db"])))
    table = summarize(trials, expected_cells=cells)
    table.insert(0, "config_hash", trials["config_hash"].iloc[0])
    out_file = os.path.join(run_dir, "summary.csv")
    table.to_csv(out_file, index=False)
    click.echo(format_table(table).to_string())
    click.echo(f"Saved summary to {out_file}")


@cli.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@reports_errors
def timing(run_dir):
    """Per-iteration timing report from RUN_DIR/timing.csv."""
    frame = _read_csv(run_dir, "timing.csv")
    report = timing_report(frame)
    report.insert(0, "config_hash", frame["config_hash"].iloc[0])
    out_file = os.path.join(run_dir, "timing_report.csv")
    report.to_csv(out_file, index=False)
    click.echo(report.drop(columns="config_hash").to_string(index=False))
    click.echo(f"Saved timing report to {out_file}")


@cli.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@config_options
@reports_errors
def spectra(config_path, seed, trials, output_dir, threads):
    """Averaged Gram eigenspectra for the config's `spectra` block."""
    config = load_config(config_path, seed=seed, output_dir=output_dir, threads=threads)
    if trials is not None and config.spectra is not None:
        config = replace(config, spectra=replace(config.spectra, trials=trials))
    for name, path in run_spectra(config).items():
        click.echo(f"Saved {name} to {path}")


@cli.command("sigma-search")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@config_options
@reports_errors
def sigma_search_cmd(config_path, seed, trials, output_dir, threads):
    """Clean-data bandwidth grid search; writes sigma_search.csv."""
    config = load_config(config_path, seed=seed, output_dir=output_dir, threads=threads)
    best, path = sigma_search(config, trials=trials or SIGMA_SEARCH_TRIALS)
    click.echo(f"Selected sigma = {best:.10g}")
    click.echo(f"Saved sigma search to {path}")


@cli.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--fig-dir", type=click.Path(file_okay=False), default=FIG_DIR, show_default=True)
@reports_errors
def plot(run_dir, fig_dir):
    """Static figures for whatever RUN_DIR holds."""
    name = os.path.basename(os.path.normpath(run_dir))
    saved = []
    if os.path.exists(os.path.join(run_dir, "learning_curves.csv")):
        curves = pd.read_csv(os.path.join(run_dir, "learning_curves.csv"), dtype={"config_hash": str})
        saved.append(plot_learning_curves(curves, os.path.join(fig_dir, f"{name}_learning_curves.png"), name))
    if os.path.exists(os.path.join(run_dir, "spectra.csv")):
        spectra_df = pd.read_csv(os.path.join(run_dir, "spectra.csv"), dtype={"config_hash": str})
        saved.append(plot_eigenspectra(spectra_df, os.path.join(fig_dir, f"{name}_eigenspectrum.png")))
    if not saved:
        raise ConfigError(f"{run_dir} has neither learning_curves.csv nor spectra.csv")
    for out_file in saved:
        click.echo(f"Saved figure to {out_file}")


if __name__ == "__main__":
    cli()
