import math

import numpy as np
import pandas as pd

from src.visualization.eigenspectrum_plot import plot_eigenspectra
from src.visualization.learning_curves import plot_learning_curves


def _curves(**extra):
    rows = [
        {"algorithm": alg, "snr_db": snr, "iteration": it, "mse_mean": scale / it, "mse_std": 0.1 * scale / it, **extra}
        for alg, scale in (("LMS", 1.0), ("QKLMS", 0.2))
        for snr in (math.inf, 8.0)
        for it in (10, 20, 30)
    ]
    return pd.DataFrame(rows)


def test_learning_curves_figure(tmp_path):
    out = plot_learning_curves(_curves(), str(tmp_path / "figs" / "curves.png"), title="smoke")
    assert out.endswith("curves.png")
    assert (tmp_path / "figs" / "curves.png").stat().st_size > 0


def test_learning_curves_carry_config_hash(tmp_path):
    plot_learning_curves(_curves(config_hash="5f0c2a9e41bd"), str(tmp_path / "from_frame.png"))
    assert b"config_hash=5f0c2a9e41bd" in (tmp_path / "from_frame.png").read_bytes()

    plot_learning_curves(_curves(), str(tmp_path / "explicit.png"), config_hash="aa11bb22cc33")
    assert b"config_hash=aa11bb22cc33" in (tmp_path / "explicit.png").read_bytes()


def test_eigenspectrum_figure_with_zero_eigenvalues(tmp_path):
    spectra = pd.DataFrame({
        "index": np.arange(1, 6),
        "exact_mean": [2.0, 1.0, 0.5, 0.1, 0.01],
        "exact_std": 0.0,
        "TS_mean": [2.0, 1.0, 0.0, 0.0, 0.0],
        "TS_std": 0.0,
        "config_hash": "abc",
    })
    out = plot_eigenspectra(spectra, str(tmp_path / "eig.png"))
    assert out == str(tmp_path / "eig.png")
    assert b"config_hash=abc" in (tmp_path / "eig.png").read_bytes()
