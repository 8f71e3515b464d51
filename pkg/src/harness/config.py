# src/harness/config.py
"""
Experiment configuration: JSON document -> schema check -> frozen dataclasses.

A config names the algorithms to compare, the Mackey-Glass series and the trial
protocol. `sigma` is required. `snr_db` entries of null mean clean data.
"""

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, replace

from jsonschema import Draft202012Validator

from src.data_generation.mackey_glass import MGParams
from src.errors import ConfigError
from src.features.quadrature import DEFAULT_NODE_CAP
from src.filters import KERNEL_TRICK_RULES, NO_TRICK_RULES

RESULTS_DIR = os.path.join("data", "results")
CONFIG_DIR = os.path.join("data", "configs")
HASH_LENGTH = 12

FEATURE_KINDS = ("identity", "rff1", "rff2", "gq", "ts")
QUADRATURE_RULES = ("dense", "sparse", "nnls")
NOISE_STAGES = ("after_standardize", "before_standardize")
HYPER_KEYS = (
    "learning_rate",
    "forgetting",
    "delta_init",
    "alpha",
    "process_noise",
    "q_factor",
    "budget",
    "significance_decay",
    "regularizer",
)

_POSITIVE_INT = {"type": "integer", "minimum": 1}

_QUADRATURE_SCHEMA = {
    "type": "object",
    "properties": {
        "rule": {"enum": list(QUADRATURE_RULES)},
        "points": _POSITIVE_INT,
        "degree": {"type": "integer", "minimum": 0},
        "target": _POSITIVE_INT,
        "fixed": {"type": "boolean"},
    },
    "required": ["rule"],
    "additionalProperties": False,
}

_ALGORITHM_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "filter": {"enum": list(NO_TRICK_RULES + KERNEL_TRICK_RULES)},
        "features": {"enum": list(FEATURE_KINDS) + [None]},
        "dim": _POSITIVE_INT,
        "degree": {"type": "integer", "minimum": 0},
        "quadrature": _QUADRATURE_SCHEMA,
        "params": {
            "type": "object",
            "propertyNames": {"enum": list(HYPER_KEYS)},
            "additionalProperties": {"type": "number"},
        },
    },
    "required": ["name", "filter"],
    "additionalProperties": False,
}

_SERIES_SCHEMA = {
    "type": "object",
    "properties": {
        "n_samples": _POSITIVE_INT,
        "beta": {"type": "number"},
        "gamma": {"type": "number"},
        "tau": {"type": "number"},
        "n_exponent": {"type": "number"},
        "sample_period": {"type": "number", "exclusiveMinimum": 0},
        "x0": {"type": "number"},
        "step": {"type": "number", "exclusiveMinimum": 0},
        "burn_in": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

_SPECTRA_SCHEMA = {
    "type": "object",
    "properties": {
        "points": _POSITIVE_INT,
        "trials": _POSITIVE_INT,
        "maps": {"type": "array", "items": {**_ALGORITHM_SCHEMA, "required": ["name", "features"]}, "minItems": 1},
        "include_exact": {"type": "boolean"},
    },
    "required": ["maps"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "trials": _POSITIVE_INT,
        "n_train": _POSITIVE_INT,
        "n_test": _POSITIVE_INT,
        "embedding_dim": _POSITIVE_INT,
        "checkpoint_stride": _POSITIVE_INT,
        "seed": {"type": "integer", "minimum": 0},
        "snr_db": {"type": "array", "items": {"type": ["number", "null"]}, "minItems": 1},
        "noise_stage": {"enum": list(NOISE_STAGES)},
        "learning_rates": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "lambda": {"type": "number", "exclusiveMinimum": 0},
        "threads": _POSITIVE_INT,
        "output_dir": {"type": "string"},
        "timing": {"type": "boolean"},
        "max_failed_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "expected_order": {"type": "array", "items": {"type": "string"}},
        "series": _SERIES_SCHEMA,
        "algorithms": {"type": "array", "items": _ALGORITHM_SCHEMA},
        "spectra": _SPECTRA_SCHEMA,
    },
    "required": ["name", "sigma"],
    "additionalProperties": False,
}

_VALIDATOR = Draft202012Validator(CONFIG_SCHEMA)


@dataclass(frozen=True)
class QuadratureSpec:
    rule: str = "dense"
    points: int = None  # per-dimension Gauss-Hermite points (dense, nnls candidates)
    degree: int = None  # polynomial exactness (sparse, nnls)
    target: int = None  # subsample to this many nodes
    fixed: bool = False  # one draw for every trial instead of one per trial


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    filter: str
    features: str = None
    dim: int = None
    degree: int = None
    quadrature: QuadratureSpec = None
    params: dict = field(default_factory=dict)

    @property
    def kernel_trick(self):
        return self.filter in KERNEL_TRICK_RULES


@dataclass(frozen=True)
class SeriesSpec:
    n_samples: int = 5000
    beta: float = 0.2
    gamma: float = 0.1
    tau: float = 30.0
    n_exponent: float = 10.0
    sample_period: float = 6.0
    x0: float = 0.9
    step: float = 0.1
    burn_in: int = 1000

    def mg_params(self):
        fields = asdict(self)
        fields.pop("n_samples")
        return MGParams(**fields)


@dataclass(frozen=True)
class SpectraSpec:
    maps: tuple
    points: int = 500
    trials: int = 20
    include_exact: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    sigma: float
    algorithms: tuple = ()
    trials: int = 200
    n_train: int = 2000
    n_test: int = 200
    embedding_dim: int = 7
    checkpoint_stride: int = 10
    seed: int = 0
    snr_db: tuple = (math.inf,)
    noise_stage: str = "after_standardize"
    learning_rates: tuple = (0.1, 0.2, 0.4)
    lam: float = 1.0
    threads: int = 1
    output_dir: str = None
    timing: bool = True
    max_failed_fraction: float = 0.05
    expected_order: tuple = ()
    series: SeriesSpec = SeriesSpec()
    spectra: SpectraSpec = None

    @property
    def out_dir(self):
        return self.output_dir or os.path.join(RESULTS_DIR, self.name)

    @property
    def cells(self):
        """(algorithm, snr_db) pairs in table order."""
        return [(a.name, s) for a in self.algorithms for s in self.snr_db]


# ------------------------------
# Resolution
# ------------------------------
def _check_algorithm(alg, d):
    if alg.kernel_trick:
        if alg.features not in (None, "identity"):
            raise ConfigError(f"{alg.name}: kernel-trick filter {alg.filter} takes no feature map")
        return
    if alg.features is None:
        raise ConfigError(f"{alg.name}: {alg.filter} needs `features` (use \"identity\" for the linear baseline)")
    if alg.features in ("rff1", "rff2") and alg.dim is None:
        raise ConfigError(f"{alg.name}: random Fourier features need `dim`")
    if alg.features == "ts" and alg.degree is None:
        raise ConfigError(f"{alg.name}: Taylor features need `degree`")
    if alg.features == "gq":
        q = alg.quadrature
        if q is None:
            raise ConfigError(f"{alg.name}: GQ features need a `quadrature` block")
        if q.rule == "dense" and q.points is None:
            raise ConfigError(f"{alg.name}: dense quadrature needs `points`")
        if q.rule in ("sparse", "nnls") and q.degree is None:
            raise ConfigError(f"{alg.name}: {q.rule} quadrature needs `degree`")
        if q.rule == "nnls" and q.points is None:
            raise ConfigError(f"{alg.name}: nnls quadrature needs candidate `points`")
        if alg.dim is not None and alg.dim % 2:
            raise ConfigError(f"{alg.name}: GQ dimension must be even, got {alg.dim}")
        if q.rule in ("dense", "nnls") and q.points**d > DEFAULT_NODE_CAP:
            raise ConfigError(f"{alg.name}: {q.points}^{d} grid nodes exceed the cap {DEFAULT_NODE_CAP}")


def _algorithm(doc):
    quad = doc.get("quadrature")
    return AlgorithmSpec(
        name=doc["name"],
        filter=doc["filter"],
        features=doc.get("features"),
        dim=doc.get("dim"),
        degree=doc.get("degree"),
        quadrature=QuadratureSpec(**quad) if quad else None,
        params=dict(doc.get("params", {})),
    )


def _expand_learning_rates(algorithms, rates, lam):
    """One entry per learning rate for every LMS-type filter without its own rate.

    The RLS family takes `lambda` as forgetting factor, KRLS as regularizer.
    """
    expanded = []
    for alg in algorithms:
        params = dict(alg.params)
        if alg.filter in ("rls", "exrls"):
            params.setdefault("forgetting", lam)
        if alg.filter == "krls":
            params.setdefault("regularizer", lam)

        if alg.filter in ("rls", "exrls", "krls") or "learning_rate" in params:
            expanded.append(replace(alg, params=params))
            continue
        for eta in rates:
            name = alg.name if len(rates) == 1 else f"{alg.name} eta={eta:g}"
            expanded.append(replace(alg, name=name, params={**params, "learning_rate": eta}))
    return tuple(expanded)


def parse_config(doc):
    """Validate a config dict and resolve it into an ExperimentConfig."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        detail = "; ".join(f"{'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in errors)
        raise ConfigError(f"invalid config: {detail}")

    d = doc.get("embedding_dim", 7)
    rates = tuple(doc.get("learning_rates", (0.1, 0.2, 0.4)))
    lam = doc.get("lambda", 1.0)

    algorithms = [_algorithm(a) for a in doc.get("algorithms", [])]
    for alg in algorithms:
        _check_algorithm(alg, d)
    algorithms = _expand_learning_rates(algorithms, rates, lam)
    names = [a.name for a in algorithms]
    if len(set(names)) != len(names):
        raise ConfigError(f"algorithm names must be unique, got {names}")

    spectra = None
    if "spectra" in doc:
        block = doc["spectra"]
        maps = tuple(_algorithm({**m, "filter": "lms"}) for m in block["maps"])
        for m in maps:
            _check_algorithm(m, d)
            if m.features in (None, "identity"):
                raise ConfigError(f"spectra map {m.name} needs a feature kind")
        spectra = SpectraSpec(
            maps=maps,
            points=block.get("points", 500),
            trials=block.get("trials", 20),
            include_exact=block.get("include_exact", True),
        )

    snr = tuple(math.inf if s is None else float(s) for s in doc.get("snr_db", [None]))
    config = ExperimentConfig(
        name=doc["name"],
        sigma=float(doc["sigma"]),
        algorithms=algorithms,
        trials=doc.get("trials", 200),
        n_train=doc.get("n_train", 2000),
        n_test=doc.get("n_test", 200),
        embedding_dim=d,
        checkpoint_stride=doc.get("checkpoint_stride", 10),
        seed=doc.get("seed", 0),
        snr_db=snr,
        noise_stage=doc.get("noise_stage", "after_standardize"),
        learning_rates=rates,
        lam=lam,
        threads=doc.get("threads", 1),
        output_dir=doc.get("output_dir"),
        timing=doc.get("timing", True),
        max_failed_fraction=doc.get("max_failed_fraction", 0.05),
        expected_order=tuple(doc.get("expected_order", ())),
        series=SeriesSpec(**doc.get("series", {})),
        spectra=spectra,
    )
    config.series.mg_params().validate()
    needed = config.n_train + config.n_test + config.embedding_dim
    if config.series.n_samples < needed:
        raise ConfigError(f"series of {config.series.n_samples} samples is shorter than the {needed} a trial needs")
    return config


def load_config(path, **overrides):
    """Read a JSON config; keyword overrides (None = keep) replace top-level keys."""
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(doc)


# ------------------------------
# Hashing
# ------------------------------
def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def config_to_dict(config):
    return _jsonable(asdict(config))


def config_hash(config):
    """First 12 hex chars of SHA-256 over the resolved config.

    Worker count and output location do not change results, so they are left out.
    """
    doc = config_to_dict(config)
    doc.pop("threads")
    doc.pop("output_dir")
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:HASH_LENGTH]
