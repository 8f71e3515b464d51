# src/analysis/eigenspectrum.py
"""
Gram matrices and their eigenspectra, exact Gaussian kernel vs. feature maps.

Outputs (via `spectra_frame`): one row per eigen-index with mean / std columns
per kernel source, averaged index-wise over trials.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.linalg import eigh

from src.errors import InvalidArgumentError, ResourceLimitError
from src.features.feature_maps import gaussian_kernel_matrix, transform

DEFAULT_GRAM_CAP = 5000
NEGATIVE_FLOOR = 1e-8
NEGATIVE_ERROR = 1e-6


@dataclass(frozen=True)
class GramSpec:
    """Points plus a kernel source: a FeatureMap, or None for the exact kernel."""

    points: np.ndarray
    bandwidth: float
    feature_map: object = None

    @property
    def label(self):
        return "exact" if self.feature_map is None else self.feature_map.kind.value


def gram_matrix(spec, cap=DEFAULT_GRAM_CAP):
    X = np.atleast_2d(np.asarray(spec.points, dtype=float))
    n = X.shape[0]
    if n < 1:
        raise InvalidArgumentError("Gram matrix needs at least one point")
    if n > cap:
        raise ResourceLimitError(f"Gram matrix of {n} points exceeds cap {cap}")

    if spec.feature_map is None:
        G = gaussian_kernel_matrix(X, X, spec.bandwidth)
    else:
        Z = transform(spec.feature_map, X)
        G = Z @ Z.T

    # upper triangle mirrored
    upper = np.triu(G)
    return upper + np.triu(G, 1).T


def eigenspectrum(G):
    """Eigenvalues of a symmetric matrix, descending.

    Small negatives (> -1e-8) are floored to 0; anything below -1e-6 * trace
    means the kernel is not positive semidefinite and raises.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {G.shape}")
    vals = eigh(G, eigvals_only=True)[::-1]
    trace = max(float(np.trace(G)), np.finfo(float).tiny)
    if vals[-1] < -NEGATIVE_ERROR * trace:
        raise InvalidArgumentError(
            f"eigenvalue {vals[-1]:.3e} is significantly negative (trace {trace:.3e}); "
            "the kernel is not positive semidefinite"
        )
    vals = np.where((vals < 0) & (vals > -NEGATIVE_FLOOR), 0.0, vals)
    return vals


def numerical_rank(spectrum, rel_tol):
    spectrum = np.asarray(spectrum)
    return int(np.sum(spectrum > rel_tol * spectrum[0]))


def energy_fraction(spectrum, m):
    """Share of the total eigenvalue mass in the top m eigenvalues."""
    spectrum = np.asarray(spectrum)
    return float(spectrum[:m].sum() / spectrum.sum())


def average_spectra(spectra):
    """Index-wise mean and std of already-sorted spectra (one per trial)."""
    stack = np.vstack(spectra)
    return stack.mean(axis=0), stack.std(axis=0)


def spectra_frame(by_source, config_hash=None):
    """by_source: {label: [spectrum per trial]} -> wide DataFrame, one row per index."""
    frame = pd.DataFrame()
    for label, spectra in by_source.items():
        mean, std = average_spectra(spectra)
        if frame.empty:
            frame["index"] = np.arange(1, mean.size + 1)
        frame[f"{label}_mean"] = mean
        frame[f"{label}_std"] = std
    if config_hash is not None:
        frame["config_hash"] = config_hash
    return frame
