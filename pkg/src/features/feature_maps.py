# src/features/feature_maps.py
"""
Explicit feature maps z: R^d -> R^D whose dot product approximates the
Gaussian kernel k(x, x') = exp(-||x - x'||^2 / (2 sigma^2)).

Kinds:
- RFF1: random frequencies, sin/cos pairs
- RFF2: random frequencies, cosine with random phase
- GQ:   quadrature nodes/weights, sin/cos pairs
- TS:   truncated Taylor expansion, one monomial per feature
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln

from src.errors import ContractViolationError, InvalidArgumentError, ResourceLimitError
from src.features.quadrature import multi_indices, subsample_rule
from src.log import get_logger

logger = get_logger(__name__)

DEFAULT_FEATURE_CAP = 10**6


class FeatureKind(str, Enum):
    RFF1 = "rff1"
    RFF2 = "rff2"
    GQ = "gq"
    TS = "ts"


def _frozen(a, dtype=float):
    if a is None:
        return None
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureMap:
    kind: FeatureKind
    input_dim: int
    output_dim: int
    bandwidth: float
    frequencies: np.ndarray = None  # (D', d), already divided by sigma
    phases: np.ndarray = None  # (D,), RFF2
    amplitudes: np.ndarray = None  # (D',), GQ: sqrt(a_i)
    monomials: np.ndarray = None  # (D, d) exponents, TS
    log_coefficients: np.ndarray = None  # (D,), TS
    seed: int = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", FeatureKind(self.kind))
        object.__setattr__(self, "frequencies", _frozen(self.frequencies))
        object.__setattr__(self, "phases", _frozen(self.phases))
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes))
        object.__setattr__(self, "monomials", _frozen(self.monomials, dtype=int))
        object.__setattr__(self, "log_coefficients", _frozen(self.log_coefficients))
        if self.output_dim < 1:
            raise InvalidArgumentError(f"feature dimension must be >= 1, got {self.output_dim}")
        if self.kind in (FeatureKind.RFF1, FeatureKind.GQ) and self.output_dim % 2:
            raise InvalidArgumentError(f"{self.kind.value} needs an even dimension, got {self.output_dim}")

    # ----------------------------
    # Serialization
    # ----------------------------
    def to_dict(self):
        def lst(a):
            return None if a is None else a.tolist()

        return {
            "kind": self.kind.value,
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "bandwidth": self.bandwidth,
            "frequencies": lst(self.frequencies),
            "phases": lst(self.phases),
            "amplitudes": lst(self.amplitudes),
            "monomials": lst(self.monomials),
            "log_coefficients": lst(self.log_coefficients),
            "seed": self.seed,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(**doc)


def save_feature_map(fm, path):
    with open(path, "w") as f:
        json.dump(fm.to_dict(), f, indent=4)


def load_feature_map(path):
    with open(path) as f:
        return FeatureMap.from_dict(json.load(f))


# ----------------------------
# Builders
# ----------------------------
def _check_sigma(sigma):
    if not sigma > 0:
        raise InvalidArgumentError(f"bandwidth must be > 0, got {sigma}")


def build_rff1(d, D, sigma, seed):
    """D/2 frequencies ~ N(0, sigma^-2 I), features sqrt(2/D) (sin, cos) pairs."""
    _check_sigma(sigma)
    if D < 2 or D % 2:
        raise InvalidArgumentError(f"RFF1 needs an even dimension >= 2, got {D}")
    rng = np.random.default_rng(seed)
    freqs = rng.standard_normal((D // 2, d)) / sigma
    return FeatureMap(FeatureKind.RFF1, d, D, sigma, frequencies=freqs, seed=seed)


def build_rff2(d, D, sigma, seed):
    """D frequencies ~ N(0, sigma^-2 I), phases ~ U[0, 2pi], sqrt(2/D) cos(w x + b)."""
    _check_sigma(sigma)
    if D < 1:
        raise InvalidArgumentError(f"RFF2 needs a dimension >= 1, got {D}")
    rng = np.random.default_rng(seed)
    freqs = rng.standard_normal((D, d)) / sigma
    phases = rng.uniform(0.0, 2.0 * np.pi, size=D)
    return FeatureMap(FeatureKind.RFF2, d, D, sigma, frequencies=freqs, phases=phases, seed=seed)


def build_gq(d, sigma, rule, target=None, seed=None):
    """Quadrature features sqrt(a_i) (cos, sin)((w_i / sigma)^T x).

    With `target`, the rule is first subsampled to that many nodes with `seed`.
    """
    _check_sigma(sigma)
    if rule.dimension != d:
        raise InvalidArgumentError(f"rule is {rule.dimension}-dimensional, map needs {d}")
    if target is not None:
        rule = subsample_rule(rule, target, seed)
    if not rule.is_nonnegative:
        raise ContractViolationError(
            "quadrature rule has negative weights; pass it through subsample_rule "
            "and rectify_rule before building GQ features"
        )
    return FeatureMap(
        FeatureKind.GQ,
        d,
        2 * rule.size,
        sigma,
        frequencies=rule.nodes / sigma,
        amplitudes=np.sqrt(rule.weights),
        seed=seed,
        meta={"rule_degree": rule.degree},
    )


def taylor_dimension(d, r):
    return math.comb(d + r, r)


def build_taylor(d, r, sigma, cap=DEFAULT_FEATURE_CAP):
    """One feature per multi-index alpha with |alpha| <= r:

        z_alpha(x) = exp(-||x||^2 / (2 sigma^2)) x^alpha / (sigma^|alpha| sqrt(alpha!))
    """
    _check_sigma(sigma)
    if r < 0:
        raise InvalidArgumentError(f"Taylor degree must be >= 0, got {r}")
    size = taylor_dimension(d, r)
    if size > cap:
        raise ResourceLimitError(f"Taylor map would have {size} features (cap {cap})")

    exps = np.array(multi_indices(d, r), dtype=int).reshape(size, d)
    log_coef = -exps.sum(axis=1) * math.log(sigma) - 0.5 * gammaln(exps + 1).sum(axis=1)
    return FeatureMap(
        FeatureKind.TS, d, size, sigma, monomials=exps, log_coefficients=log_coef, meta={"degree": r}
    )


# ----------------------------
# Application
# ----------------------------
def _check_inputs(fm, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != fm.input_dim:
        raise InvalidArgumentError(f"expected inputs with {fm.input_dim} columns, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError("inputs contain NaN or Inf")
    return X


def transform(fm, X):
    """Map every row of X (n x d) to its feature vector, returning n x D."""
    X = _check_inputs(fm, X)
    n = X.shape[0]

    if fm.kind is FeatureKind.RFF1:
        proj = X @ fm.frequencies.T
        Z = np.empty((n, fm.output_dim))
        Z[:, 0::2] = np.sin(proj)
        Z[:, 1::2] = np.cos(proj)
        return Z * math.sqrt(2.0 / fm.output_dim)

    if fm.kind is FeatureKind.RFF2:
        return math.sqrt(2.0 / fm.output_dim) * np.cos(X @ fm.frequencies.T + fm.phases)

    if fm.kind is FeatureKind.GQ:
        proj = X @ fm.frequencies.T
        Z = np.empty((n, fm.output_dim))
        Z[:, 0::2] = fm.amplitudes * np.cos(proj)
        Z[:, 1::2] = fm.amplitudes * np.sin(proj)
        return Z

    # TS
    monos = np.ones((n, fm.output_dim))
    for l in range(fm.input_dim):
        powers = X[:, l][:, None] ** np.arange(int(fm.monomials[:, l].max()) + 1)[None, :]
        monos *= powers[:, fm.monomials[:, l]]
    envelope = np.exp(-np.sum(X**2, axis=1) / (2.0 * fm.bandwidth**2))
    return envelope[:, None] * np.exp(fm.log_coefficients)[None, :] * monos


def map(fm, x):
    """Feature vector of a single point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidArgumentError(f"expected a single point, got shape {x.shape}")
    return transform(fm, x[None, :])[0]


def kernel_estimate(fm, x, x_prime):
    return float(np.dot(map(fm, x), map(fm, x_prime)))


# ----------------------------
# Exact kernels and bounds
# ----------------------------
def gaussian_kernel(x, x_prime, sigma):
    _check_sigma(sigma)
    diff = np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)
    return float(np.exp(-np.dot(diff, diff) / (2.0 * sigma**2)))


def gaussian_kernel_a(x, x_prime, a):
    """Same kernel written as exp(-a ||x - x'||^2), a = 1 / (2 sigma^2)."""
    diff = np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)
    return float(np.exp(-a * np.dot(diff, diff)))


def gaussian_kernel_matrix(X, Y, sigma):
    _check_sigma(sigma)
    sq = cdist(np.atleast_2d(X), np.atleast_2d(Y), "sqeuclidean")
    return np.exp(-sq / (2.0 * sigma**2))


def taylor_kernel(x, x_prime, sigma, r):
    """Closed form of the degree-r Taylor kernel, independent of the feature path."""
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    t = np.dot(x, x_prime) / sigma**2
    series = sum(t**n / math.factorial(n) for n in range(r + 1))
    return float(np.exp(-(np.dot(x, x) + np.dot(x_prime, x_prime)) / (2.0 * sigma**2)) * series)


def taylor_error_bound(x, x_prime, sigma, r):
    """(||x|| ||x'|| / sigma^2)^(r+1) / (r+1)!"""
    u = np.linalg.norm(x) * np.linalg.norm(x_prime) / sigma**2
    return float(u ** (r + 1) / math.factorial(r + 1))


def quadrature_error_bound(b, M, R):
    """3 (e b^2 M^2 / R)^(R/2) for a non-negative rule exact to degree R."""
    return float(3.0 * (math.e * b**2 * M**2 / R) ** (R / 2.0))


def rff_variance(kind, delta_norm, sigma, D):
    """Closed-form variance of the RFF kernel estimate at separation ||delta||."""
    k1 = math.exp(-(delta_norm**2) / (2.0 * sigma**2))
    k2 = math.exp(-((2.0 * delta_norm) ** 2) / (2.0 * sigma**2))
    kind = FeatureKind(kind)
    if kind is FeatureKind.RFF1:
        return (1.0 + k2 - 2.0 * k1**2) / D
    if kind is FeatureKind.RFF2:
        return (1.0 + 0.5 * k2 - k1**2) / D
    raise InvalidArgumentError(f"no variance formula for {kind.value}")
