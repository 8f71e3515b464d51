# src/analysis/summarize.py
"""
Aggregates per-trial results into the MSE table and per-iteration timing into
a growth report.

Inputs are the frames the harness writes (trials.csv, timing.csv).
"""

import numpy as np
import pandas as pd

from src.log import get_logger

logger = get_logger(__name__)

EDGE_FRACTION = 0.1
GROWTH_BINS = 20


def snr_label(snr_db):
    return "clean" if snr_db is None or np.isinf(snr_db) else f"{snr_db:g} dB"


# ------------------------------
# MSE TABLE
# ------------------------------
def summarize(trials, expected_cells=None):
    """Mean +- sample std of final test MSE per (algorithm, snr_db).

    `expected_cells` lists (algorithm, snr_db) pairs that must appear; cells with
    no completed trial are reported with status "missing" and NaN statistics.
    """
    done = trials[trials["status"] == "ok"]
    grouped = done.groupby(["algorithm", "snr_db"], sort=False)
    table = grouped.agg(
        trials=("final_mse", "size"),
        mse_mean=("final_mse", "mean"),
        mse_std=("final_mse", "std"),
        dict_size_mean=("dict_size", "mean"),
        feature_dim=("feature_dim", "first"),
    ).reset_index()

    table["status"] = np.where(table["trials"] == 1, "single_trial", "ok")
    table["mse_std"] = table["mse_std"].fillna(0.0)

    if expected_cells:
        present = set(zip(table["algorithm"], table["snr_db"]))
        missing = [
            {"algorithm": a, "snr_db": s, "trials": 0, "status": "missing"}
            for a, s in expected_cells
            if (a, s) not in present
        ]
        if missing:
            logger.warning("%d result cells have no completed trials", len(missing))
            table = pd.concat([table, pd.DataFrame(missing)], ignore_index=True)
        order = {cell: i for i, cell in enumerate(expected_cells)}
        table["_order"] = [order.get(cell, len(order)) for cell in zip(table["algorithm"], table["snr_db"])]
        table = table.sort_values("_order", kind="stable").drop(columns="_order").reset_index(drop=True)

    table["snr"] = table["snr_db"].map(snr_label)
    return table


def format_table(table):
    """Algorithms as rows, SNR as columns, cells "mean +- std (size)"."""

    def cell(row):
        if row["status"] == "missing":
            return "missing"
        text = f"{row['mse_mean']:.4f} +- {row['mse_std']:.4f}"
        if pd.notna(row.get("dict_size_mean")) and row["dict_size_mean"] > 0:
            text += f" ({row['dict_size_mean']:.0f})"
        if row["status"] == "single_trial":
            text += " [1 trial]"
        return text

    shown = table.assign(cell=table.apply(cell, axis=1))
    wide = shown.pivot(index="algorithm", columns="snr", values="cell")
    wide = wide.reindex(index=list(dict.fromkeys(table["algorithm"])))
    return wide.reindex(columns=list(dict.fromkeys(table["snr"])))


# ------------------------------
# TIMING
# ------------------------------
def _growth_exponent(iterations, seconds):
    """Slope of log(median step time) against log(iteration) over log-spaced bins."""
    lo = max(1, int(len(iterations) * EDGE_FRACTION))
    edges = np.unique(np.geomspace(lo, len(iterations), GROWTH_BINS + 1).astype(int))
    centers, medians = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            centers.append(np.median(iterations[a:b]))
            medians.append(np.median(seconds[a:b]))
    if len(centers) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(centers), np.log(np.maximum(medians, 1e-12)), 1)
    return float(slope)


def timing_report(timing):
    """Per algorithm: early / late median step time, their ratio, growth exponent."""
    rows = []
    for algorithm, frame in timing.groupby("algorithm", sort=False):
        frame = frame.sort_values("iteration")
        seconds = frame["seconds"].to_numpy()
        iterations = frame["iteration"].to_numpy()
        edge = max(1, int(len(seconds) * EDGE_FRACTION))
        early = float(np.median(seconds[:edge]))
        late = float(np.median(seconds[-edge:]))
        row = {
            "algorithm": algorithm,
            "iterations": len(seconds),
            "early_median_s": early,
            "late_median_s": late,
            "late_early_ratio": late / early if early > 0 else float("inf"),
            "growth_exponent": _growth_exponent(iterations, seconds),
        }
        if "build_seconds" in frame:
            row["build_seconds"] = float(frame["build_seconds"].iloc[0])
        rows.append(row)
    return pd.DataFrame(rows)
