# src/visualization/learning_curves.py
"""
Test-set learning curves (mean +- 1 std shaded, log-scale MSE), one panel per
SNR, from a run directory's learning_curves.csv.

Run:
    python -m src.visualization.learning_curves data/results/table1
"""

import os
import sys

import matplotlib.pyplot as plt
import pandas as pd

from src.analysis.summarize import snr_label

FIG_DIR = "reports/figures"


def plot_learning_curves(curves, out_file, title=None, config_hash=None):
    """The figure carries the run's config hash in a footer and in the PNG metadata."""
    if config_hash is None and "config_hash" in curves:
        config_hash = str(curves["config_hash"].iloc[0])
    snrs = list(dict.fromkeys(curves["snr_db"]))
    fig, axes = plt.subplots(1, len(snrs), figsize=(6 * len(snrs), 4.5), squeeze=False, sharey=True)

    for ax, snr in zip(axes[0], snrs):
        panel = curves[curves["snr_db"] == snr]
        for algorithm, grp in panel.groupby("algorithm", sort=False):
            lower = (grp["mse_mean"] - grp["mse_std"]).clip(lower=grp["mse_mean"].min() * 1e-3)
            ax.plot(grp["iteration"], grp["mse_mean"], label=algorithm)
            ax.fill_between(grp["iteration"], lower, grp["mse_mean"] + grp["mse_std"], alpha=0.2)
        ax.set_yscale("log")
        ax.set_title(snr_label(snr))
        ax.set_xlabel("Training iteration")
        ax.grid(True, which="both", alpha=0.3)
    axes[0][0].set_ylabel("Test MSE")
    axes[0][-1].legend(fontsize="small")
    if title:
        fig.suptitle(title)
    metadata = None
    if config_hash:
        fig.text(0.99, 0.0, f"config {config_hash}", ha="right", va="top", fontsize="x-small", color="gray")
        metadata = {"Description": f"config_hash={config_hash}"}

    os.makedirs(os.path.dirname(out_file) or ".", exist_ok=True)
    fig.savefig(out_file, dpi=300, bbox_inches="tight", metadata=metadata)
    plt.close(fig)
    return out_file


if __name__ == "__main__":
    run_dir = sys.argv[1]
    curves = pd.read_csv(os.path.join(run_dir, "learning_curves.csv"), dtype={"config_hash": str})
    name = os.path.basename(os.path.normpath(run_dir))
    out_file = plot_learning_curves(curves, os.path.join(FIG_DIR, f"{name}_learning_curves.png"), name)
    print(f"Saved learning curves to {out_file}")
