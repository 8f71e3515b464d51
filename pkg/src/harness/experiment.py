# src/harness/experiment.py
"""
Multi-trial experiment runner.

For every (trial, SNR, algorithm) unit: draw a random training start, add
noise, build the feature map (TS fixed, GQ resampled, RFF redrawn), stream the
training pairs through a fresh filter and record test-set MSE at every
checkpoint. Units run on a thread pool; results are sorted before anything is
written, so outputs do not depend on the worker count.

Outputs (in the run directory):
- trials.csv           one row per unit
- curves.csv           test MSE per checkpoint per unit
- learning_curves.csv  mean / std across trials per checkpoint
- summary.csv          final-MSE table (see analysis.summarize)
- timing.csv           per-iteration wall time from a serialized warm run
- timing_report.csv    early / late medians and growth exponent
- config.json, manifest.json
"""

import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from src import __version__
from src.analysis.eigenspectrum import GramSpec, energy_fraction, eigenspectrum, gram_matrix, numerical_rank, spectra_frame
from src.analysis.summarize import summarize, timing_report
from src.data_generation.mackey_glass import generate_mackey_glass
from src.errors import ConfigError, ExperimentAbortedError, KafError, NumericalBreakdownError
from src.features.feature_maps import (
    build_gq,
    build_rff1,
    build_rff2,
    build_taylor,
    quadrature_error_bound,
    taylor_error_bound,
)
from src.features.quadrature import (
    QuadratureRule,
    dense_grid_rule,
    nnls_weights,
    polynomial_exactness_check,
    rectify_rule,
    sparse_grid_for_degree,
    subsample_rule,
)
from src.filters import make_filter
from src.harness.config import config_hash, config_to_dict
from src.log import get_logger
from src.processing.prepare_series import add_awgn, embed, random_start, standardize, train_test_split

logger = get_logger(__name__)

PARTIAL_FILE = "trials.partial.csv"
WARMUP_STEPS = 50
BUILD_REPEATS = 5
SIGMA_GRID = (0.25, 0.5, 1.0 / math.sqrt(2.0), 1.0, 2.0)
SIGMA_SEARCH_TRIALS = 5
EXACT_RANK_TOL = 1e-12
MAP_RANK_TOL = 1e-8

# SeedSequence stream tags
_DATA, _NOISE, _MAP = 0, 1, 2


def seed_int(*words):
    """Deterministic 32-bit seed from integer words."""
    return int(np.random.SeedSequence(list(words)).generate_state(1)[0])


# ------------------------------
# Results
# ------------------------------
@dataclass
class TrialResult:
    algorithm: str
    snr_db: float
    trial: int
    seed: int
    checkpoints: np.ndarray = field(default=None, repr=False)
    curve: np.ndarray = field(default=None, repr=False)  # test MSE per checkpoint
    dict_sizes: np.ndarray = field(default=None, repr=False)
    step_seconds: np.ndarray = field(default=None, repr=False)
    final_mse: float = math.nan
    feature_dim: int = None
    build_seconds: float = math.nan
    status: str = "ok"
    error: str = ""

    @property
    def ok(self):
        return self.status == "ok"

    def row(self, kernel_trick):
        return {
            "algorithm": self.algorithm,
            "snr_db": self.snr_db,
            "trial": self.trial,
            "seed": self.seed,
            "status": self.status,
            "final_mse": self.final_mse,
            "dict_size": self.dict_sizes[-1] if self.ok and kernel_trick else math.nan,
            "feature_dim": self.feature_dim if self.feature_dim is not None else math.nan,
            "error": self.error,
        }


@dataclass
class ExperimentResult:
    config_hash: str
    results: list
    paths: dict = field(default_factory=dict)

    @property
    def completed(self):
        return [r for r in self.results if r.ok]


# ------------------------------
# Feature maps
# ------------------------------
def base_quadrature_rule(spec, d):
    """The deterministic rule GQ features are subsampled from."""
    if spec.rule == "dense":
        rule = dense_grid_rule(d, spec.points)
    elif spec.rule == "sparse":
        rule = sparse_grid_for_degree(d, spec.degree)
    else:
        candidates = dense_grid_rule(d, spec.points).nodes
        weights, residual = nnls_weights(candidates, spec.degree)
        keep = weights > 0
        logger.info("nnls kept %d of %d candidate nodes (residual %.3e)", keep.sum(), weights.size, residual)
        rule = QuadratureRule(candidates[keep], weights[keep], spec.degree)

    logger.info("%s quadrature rule: %d nodes, degree %d, non-negative: %s",
                spec.rule, rule.size, rule.degree, rule.is_nonnegative)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("exactness error at degree %d: %.3e", rule.degree, polynomial_exactness_check(rule, rule.degree))
    return rule


class FeatureSource:
    """Builds one algorithm's feature map per trial; deterministic parts are built once."""

    def __init__(self, spec, d, sigma, master_seed):
        self.spec = spec
        self.d = d
        self.sigma = sigma
        self._fixed = None
        self._base_rule = None

        if spec.features == "ts":
            self._fixed = build_taylor(d, spec.degree, sigma)
            corner = np.ones(d)
            logger.info("%s: Taylor map D=%d, worst-case truncation bound on [-1,1]^%d: %.3e",
                        spec.name, self._fixed.output_dim, d, taylor_error_bound(corner, corner, sigma, spec.degree))
        elif spec.features == "gq":
            self._base_rule = base_quadrature_rule(spec.quadrature, d)
            logger.debug("%s: quadrature error bound %.3e", spec.name,
                         quadrature_error_bound(1.0 / sigma, 2.0 * math.sqrt(d), max(self._base_rule.degree, 1)))
            if spec.quadrature.fixed:
                self._fixed = self._gq(seed_int(master_seed, _MAP))

    @property
    def target(self):
        q = self.spec.quadrature
        if q is not None and q.target is not None:
            return q.target
        return self.spec.dim // 2 if self.spec.dim else None

    def _gq(self, seed):
        rule = self._base_rule
        if self.target is not None:
            rule = subsample_rule(rule, self.target, seed)
        if not rule.is_nonnegative:
            rule = rectify_rule(rule)
        return build_gq(self.d, self.sigma, rule, seed=seed)

    def build(self, seed):
        kind = self.spec.features
        if kind in (None, "identity"):
            return None
        if self._fixed is not None:
            return self._fixed
        if kind == "rff1":
            return build_rff1(self.d, self.spec.dim, self.sigma, seed)
        if kind == "rff2":
            return build_rff2(self.d, self.spec.dim, self.sigma, seed)
        return self._gq(seed)


# ------------------------------
# Data
# ------------------------------
def prepare_series(config):
    """Generate the Mackey-Glass series once; returns (raw, standardized, scaling)."""
    raw = generate_mackey_glass(config.series.mg_params(), config.series.n_samples)
    scaled, record = standardize(raw)
    logger.info("series: %d samples, scaling mean=%.4f std=%.4f max_abs=%.4f",
                raw.size, record.mean, record.std, record.max_abs)
    return raw, scaled, record


def trial_data(config, raw, scaled, record, trial, snr_index, snr_db):
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, trial, _DATA]))
    start = random_start(rng, scaled.size, config.embedding_dim, config.n_train, config.n_test)
    noise_seed = np.random.SeedSequence([config.seed, trial, _NOISE, snr_index])

    if math.isinf(snr_db):
        series = scaled
    elif config.noise_stage == "after_standardize":
        series = add_awgn(scaled, snr_db, noise_seed)
    else:
        series, record = standardize(add_awgn(raw, snr_db, noise_seed))
    return train_test_split(series, config.embedding_dim, start, config.n_train, config.n_test, record)


def checkpoint_iterations(n_train, stride):
    """Iterations (1-based) after which test MSE is measured; always ends at n_train."""
    points = list(range(stride, n_train + 1, stride))
    if not points or points[-1] != n_train:
        points.append(n_train)
    return np.array(points)


# ------------------------------
# One trial
# ------------------------------
def stream(flt, U, y, V, y_test, checkpoints):
    """Train on (U, y) one row at a time; test MSE and model size at each checkpoint."""
    curve = np.empty(len(checkpoints))
    sizes = np.empty(len(checkpoints), dtype=int)
    step_seconds = np.empty(len(y))
    nxt = 0
    clock = time.perf_counter
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(len(y)):
            t0 = clock()
            flt.update(U[n], y[n])
            step_seconds[n] = clock() - t0
            if n + 1 == checkpoints[nxt]:
                err = y_test - flt.predict_encoded(V)
                curve[nxt] = float(np.mean(err**2))
                sizes[nxt] = flt.size
                nxt += 1
    return curve, sizes, step_seconds


def run_trial(config, source, alg, train, test, map_seed):
    t0 = time.perf_counter()
    fm = source.build(map_seed)
    build_seconds = time.perf_counter() - t0

    flt = make_filter(alg.filter, config.embedding_dim, feature_map=fm, bandwidth=config.sigma, **alg.params)
    U, V = flt.encode(train.inputs), flt.encode(test.inputs)
    checkpoints = checkpoint_iterations(config.n_train, config.checkpoint_stride)
    curve, sizes, step_seconds = stream(flt, U, train.targets, V, test.targets, checkpoints)
    if not np.all(np.isfinite(curve)):
        raise NumericalBreakdownError(f"{alg.name} diverged (non-finite test MSE)")
    return checkpoints, curve, sizes, step_seconds, build_seconds, (None if alg.kernel_trick else flt.size)


def _run_unit(config, source, alg, data_args, trial, snr_index, snr_db, alg_index):
    seed = seed_int(config.seed, trial)
    result = TrialResult(alg.name, snr_db, trial, seed)
    try:
        train, test = trial_data(config, *data_args, trial, snr_index, snr_db)
        map_seed = seed_int(config.seed, trial, _MAP, alg_index)
        (result.checkpoints, result.curve, result.dict_sizes, result.step_seconds,
         result.build_seconds, result.feature_dim) = run_trial(config, source, alg, train, test, map_seed)
        result.final_mse = float(result.curve[-1])
    except (KafError, np.linalg.LinAlgError) as exc:
        result.status = "failed"
        result.error = f"{type(exc).__name__}: {exc}"
        logger.warning("trial %d of %s at %s excluded: %s", trial, alg.name, _snr_text(snr_db), result.error)
    else:
        logger.debug("trial %d %s %s: final MSE %.5f", trial, alg.name, _snr_text(snr_db), result.final_mse)
    return result


def _snr_text(snr_db):
    return "clean" if math.isinf(snr_db) else f"{snr_db:g} dB"


# ------------------------------
# Collection and output
# ------------------------------
class TrialCollector:
    """Receives completed trials; appends each to a partial CSV as it arrives."""

    def __init__(self, path, chash, kernel_trick):
        self.path = path
        self.chash = chash
        self.kernel_trick = kernel_trick
        self.results = []
        if os.path.exists(path):
            os.remove(path)

    def add(self, result):
        self.results.append(result)
        row = {"config_hash": self.chash, **result.row(self.kernel_trick[result.algorithm])}
        pd.DataFrame([row]).to_csv(self.path, mode="a", header=len(self.results) == 1, index=False)

    def ordered(self, algorithm_order, snr_order):
        rank = {name: i for i, name in enumerate(algorithm_order)}
        snr_rank = {snr: i for i, snr in enumerate(snr_order)}
        return sorted(self.results, key=lambda r: (rank[r.algorithm], snr_rank[r.snr_db], r.trial))


def trials_frame(results, chash, kernel_trick):
    rows = [{"config_hash": chash, **r.row(kernel_trick[r.algorithm])} for r in results]
    return pd.DataFrame(rows)


def curves_frame(results, chash):
    frames = [
        pd.DataFrame({
            "config_hash": chash,
            "algorithm": r.algorithm,
            "snr_db": r.snr_db,
            "trial": r.trial,
            "iteration": r.checkpoints,
            "mse": r.curve,
            "size": r.dict_sizes,
        })
        for r in results if r.ok
    ]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def learning_curves(curves):
    """Mean and sample std of test MSE across trials at every checkpoint."""
    out = (
        curves.groupby(["config_hash", "algorithm", "snr_db", "iteration"], sort=False)["mse"]
        .agg(mse_mean="mean", mse_std="std", trials="size")
        .reset_index()
    )
    out["mse_std"] = out["mse_std"].fillna(0.0)
    return out


def write_outputs(config, chash, results, out_dir):
    kernel_trick = {a.name: a.kernel_trick for a in config.algorithms}
    paths = {}

    trials = trials_frame(results, chash, kernel_trick)
    paths["trials"] = os.path.join(out_dir, "trials.csv")
    trials.to_csv(paths["trials"], index=False)

    curves = curves_frame(results, chash)
    if not curves.empty:
        paths["curves"] = os.path.join(out_dir, "curves.csv")
        curves.to_csv(paths["curves"], index=False)
        paths["learning_curves"] = os.path.join(out_dir, "learning_curves.csv")
        learning_curves(curves).to_csv(paths["learning_curves"], index=False)

    summary = summarize(trials, expected_cells=config.cells)
    summary.insert(0, "config_hash", chash)
    paths["summary"] = os.path.join(out_dir, "summary.csv")
    summary.to_csv(paths["summary"], index=False)

    paths["config"] = os.path.join(out_dir, "config.json")
    with open(paths["config"], "w") as f:
        json.dump({"config_hash": chash, **config_to_dict(config)}, f, indent=4)
    return paths


def write_manifest(config, chash, out_dir, paths, **extra):
    manifest = {
        "config_hash": chash,
        "name": config.name,
        "version": __version__,
        "seed": config.seed,
        "noise_stage": config.noise_stage,
        "artifacts": {k: os.path.basename(v) for k, v in sorted(paths.items())},
        **extra,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=4)
    return path


# ------------------------------
# Experiment
# ------------------------------
def run_experiment(config, threads=None):
    """Run every (trial, SNR, algorithm) unit and write the result files."""
    if not config.algorithms:
        raise ConfigError(f"config {config.name!r} lists no algorithms")
    chash = config_hash(config)
    out_dir = config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    threads = threads or config.threads

    data_args = prepare_series(config)
    sources = {a.name: FeatureSource(a, config.embedding_dim, config.sigma, config.seed) for a in config.algorithms}
    units = [
        (alg, trial, si, snr, ai)
        for trial in range(config.trials)
        for si, snr in enumerate(config.snr_db)
        for ai, alg in enumerate(config.algorithms)
    ]
    logger.info("%s [%s]: %d trials x %d SNR x %d algorithms on %d threads",
                config.name, chash, config.trials, len(config.snr_db), len(config.algorithms), threads)

    kernel_trick = {a.name: a.kernel_trick for a in config.algorithms}
    collector = TrialCollector(os.path.join(out_dir, PARTIAL_FILE), chash, kernel_trick)
    report_every = max(1, len(units) // 10)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_run_unit, config, sources[alg.name], alg, data_args, trial, si, snr, ai)
            for alg, trial, si, snr, ai in units
        ]
        for done, fut in enumerate(as_completed(futures), start=1):
            collector.add(fut.result())
            if done % report_every == 0 or done == len(units):
                logger.info("%d / %d trials finished", done, len(units))

    results = collector.ordered([a.name for a in config.algorithms], config.snr_db)
    paths = write_outputs(config, chash, results, out_dir)
    os.remove(collector.path)

    failed = sum(not r.ok for r in results)
    if failed / len(results) > config.max_failed_fraction:
        write_manifest(config, chash, out_dir, paths, failed_trials=failed, aborted=True)
        raise ExperimentAbortedError(
            f"{failed} of {len(results)} trials failed (limit {config.max_failed_fraction:.0%}); see {paths['trials']}"
        )
    if failed:
        logger.warning("%d of %d trials failed and were excluded", failed, len(results))

    if config.timing:
        paths.update(run_timing(config, sources, data_args, chash))
    paths["manifest"] = write_manifest(config, chash, out_dir, paths, failed_trials=failed)
    return ExperimentResult(chash, results, paths)


# ------------------------------
# Timing
# ------------------------------
def _median_build_seconds(source, seed):
    times = []
    for _ in range(BUILD_REPEATS):
        t0 = time.perf_counter()
        source.build(seed)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run_timing(config, sources, data_args, chash):
    """One warm, single-threaded run per algorithm on clean trial-0 data."""
    train, test = trial_data(config, *data_args, 0, 0, math.inf)
    checkpoints = checkpoint_iterations(config.n_train, config.n_train)
    frames = []
    for ai, alg in enumerate(config.algorithms):
        source = sources[alg.name]
        seed = seed_int(config.seed, 0, _MAP, ai)
        build_seconds = _median_build_seconds(source, seed)
        fm = source.build(seed)

        def fresh():
            return make_filter(alg.filter, config.embedding_dim, feature_map=fm, bandwidth=config.sigma, **alg.params)

        flt = fresh()
        U, V = flt.encode(train.inputs), flt.encode(test.inputs)
        warm = min(WARMUP_STEPS, len(U))
        stream(flt, U[:warm], train.targets[:warm], V, test.targets, checkpoint_iterations(warm, warm))
        _, _, step_seconds = stream(fresh(), U, train.targets, V, test.targets, checkpoints)

        frames.append(pd.DataFrame({
            "config_hash": chash,
            "algorithm": alg.name,
            "iteration": np.arange(1, len(step_seconds) + 1),
            "seconds": step_seconds,
            "build_seconds": build_seconds,
        }))
        logger.info("timed %s: %.3e s/iteration median, build %.3e s", alg.name, np.median(step_seconds), build_seconds)

    timing = pd.concat(frames, ignore_index=True)
    paths = {"timing": os.path.join(config.out_dir, "timing.csv")}
    timing.to_csv(paths["timing"], index=False)
    report = timing_report(timing)
    report.insert(0, "config_hash", chash)
    paths["timing_report"] = os.path.join(config.out_dir, "timing_report.csv")
    report.to_csv(paths["timing_report"], index=False)
    return paths


# ------------------------------
# Eigenspectra
# ------------------------------
def _spectra_trial(config, sources, scaled, trial):
    spec = config.spectra
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, trial, _DATA]))
    start = random_start(rng, scaled.size, config.embedding_dim, spec.points, 0)
    X = embed(scaled, config.embedding_dim, start, spec.points).inputs

    spectra, dims = {}, {}
    if spec.include_exact:
        spectra["exact"] = eigenspectrum(gram_matrix(GramSpec(X, config.sigma)))
    for i, m in enumerate(spec.maps):
        fm = sources[m.name].build(seed_int(config.seed, trial, _MAP, i))
        gram = GramSpec(X, config.sigma, fm)
        spectra[m.name] = eigenspectrum(gram_matrix(gram))
        dims[m.name] = fm.output_dim
        logger.debug("trial %d: %s (%s) Gram spectrum done", trial, m.name, gram.label)
    return trial, spectra, dims


def run_spectra(config, threads=None):
    """Averaged Gram eigenspectra: exact kernel vs. each configured feature map."""
    spec = config.spectra
    if spec is None:
        raise ConfigError(f"config {config.name!r} has no `spectra` block")
    chash = config_hash(config)
    os.makedirs(config.out_dir, exist_ok=True)
    _, scaled, _ = prepare_series(config)
    sources = {m.name: FeatureSource(m, config.embedding_dim, config.sigma, config.seed) for m in spec.maps}

    with ThreadPoolExecutor(max_workers=threads or config.threads) as pool:
        futures = [pool.submit(_spectra_trial, config, sources, scaled, t) for t in range(spec.trials)]
        outcomes = sorted((f.result() for f in futures), key=lambda o: o[0])

    labels = (["exact"] if spec.include_exact else []) + [m.name for m in spec.maps]
    by_source = {label: [o[1][label] for o in outcomes] for label in labels}
    dims = outcomes[0][2]

    rows = []
    half = max(dims.values()) // 2
    for label, spectra in by_source.items():
        tol = EXACT_RANK_TOL if label == "exact" else MAP_RANK_TOL
        m = dims.get(label, 2 * half) // 2
        rows.append({
            "config_hash": chash,
            "source": label,
            "feature_dim": dims.get(label, math.nan),
            "rank_mean": float(np.mean([numerical_rank(s, tol) for s in spectra])),
            "rank_tol": tol,
            "energy_at": m,
            "energy_fraction_mean": float(np.mean([energy_fraction(s, m) for s in spectra])),
        })

    paths = {
        "spectra": os.path.join(config.out_dir, "spectra.csv"),
        "spectra_summary": os.path.join(config.out_dir, "spectra_summary.csv"),
    }
    spectra_frame(by_source, chash).to_csv(paths["spectra"], index=False)
    pd.DataFrame(rows).to_csv(paths["spectra_summary"], index=False)
    paths["manifest"] = write_manifest(config, chash, config.out_dir, paths, spectra_trials=spec.trials)
    return paths


# ------------------------------
# Sigma search
# ------------------------------
def ordering_violations(means, expected_order):
    """Pairs (i before j in expected_order) where the mean MSE of i exceeds j's."""
    names = [n for n in expected_order if n in means]
    return sum(means[a] > means[b] for i, a in enumerate(names) for b in names[i + 1:])


def sigma_search(config, grid=SIGMA_GRID, trials=SIGMA_SEARCH_TRIALS, threads=None):
    """Clean-data runs at every bandwidth in `grid`, ranked by ordering violations
    and then by mean log MSE. Writes sigma_search.csv next to the runs."""
    search_dir = os.path.join(config.out_dir, "sigma_search")
    frames = []
    for sigma in grid:
        cfg = replace(
            config,
            sigma=float(sigma),
            trials=trials,
            snr_db=(math.inf,),
            timing=False,
            output_dir=os.path.join(search_dir, f"sigma_{sigma:.4f}"),
        )
        try:
            run = run_experiment(cfg, threads)
        except ExperimentAbortedError as exc:
            logger.warning("sigma %.4f skipped: %s", sigma, exc)
            continue
        summary = summarize(trials_frame(run.results, run.config_hash, {a.name: a.kernel_trick for a in cfg.algorithms}))
        means = dict(zip(summary["algorithm"], summary["mse_mean"]))
        summary["sigma"] = sigma
        summary["violations"] = ordering_violations(means, config.expected_order)
        summary["mean_log_mse"] = float(np.mean(np.log(summary["mse_mean"])))
        frames.append(summary)
        logger.info("sigma %.4f: %d ordering violations, mean log MSE %.3f",
                    sigma, summary["violations"].iloc[0], summary["mean_log_mse"].iloc[0])

    if not frames:
        raise ExperimentAbortedError("every bandwidth in the sigma grid aborted")
    table = pd.concat(frames, ignore_index=True)
    scores = table.groupby("sigma")[["violations", "mean_log_mse"]].first()
    best = scores.sort_values(["violations", "mean_log_mse"]).index[0]
    table["selected"] = table["sigma"] == best
    table.insert(0, "config_hash", config_hash(config))

    path = os.path.join(config.out_dir, "sigma_search.csv")
    os.makedirs(config.out_dir, exist_ok=True)
    table[["config_hash", "sigma", "algorithm", "trials", "mse_mean", "mse_std", "violations", "mean_log_mse", "selected"]].to_csv(path, index=False)
    logger.info("selected sigma %.4f", best)
    return best, path
