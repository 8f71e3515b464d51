# src/visualization/eigenspectrum_plot.py

import os
import sys

import matplotlib.pyplot as plt
import pandas as pd

FIG_DIR = "reports/figures"
FLOOR = 1e-16  # log axis cannot show exact zeros


def plot_eigenspectra(spectra, out_file, title=None, config_hash=None):
    """Averaged Gram eigenvalues in descending order, one line per kernel source."""
    if config_hash is None and "config_hash" in spectra:
        config_hash = str(spectra["config_hash"].iloc[0])
    sources = [c[: -len("_mean")] for c in spectra.columns if c.endswith("_mean")]

    plt.figure(figsize=(8, 5))
    for source in sources:
        plt.plot(spectra["index"], spectra[f"{source}_mean"].clip(lower=FLOOR), label=source)

    plt.yscale("log")
    plt.title(title or "Gram Matrix Eigenspectrum")
    plt.xlabel("Eigenvalue index")
    plt.ylabel("Eigenvalue")
    plt.legend()
    plt.grid(True, which="both", alpha=0.3)
    metadata = None
    if config_hash:
        plt.figtext(0.99, 0.0, f"config {config_hash}", ha="right", va="top", fontsize="x-small", color="gray")
        metadata = {"Description": f"config_hash={config_hash}"}

    os.makedirs(os.path.dirname(out_file) or ".", exist_ok=True)
    plt.savefig(out_file, dpi=300, bbox_inches="tight", metadata=metadata)
    plt.close()
    return out_file


if __name__ == "__main__":
    run_dir = sys.argv[1]
    spectra = pd.read_csv(os.path.join(run_dir, "spectra.csv"), dtype={"config_hash": str})
    name = os.path.basename(os.path.normpath(run_dir))
    out_file = plot_eigenspectra(spectra, os.path.join(FIG_DIR, f"{name}_eigenspectrum.png"))
    print(f"Saved eigenspectrum plot to {out_file}")
