# src/features/quadrature.py
"""
Quadrature rules for the standard normal spectral measure N(0, I_d).

Builds:
- 1-D Gauss-Hermite rules (Golub-Welsch)
- dense tensor-product grids
- Smolyak sparse grids (signed weights)
- NNLS moment-matched weights on arbitrary points
- importance subsampling of an existing rule

The kernel bandwidth is not applied here; feature_maps scales nodes by 1/sigma.
"""

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import pandas as pd
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import nnls

from src.errors import InvalidArgumentError, ResourceLimitError
from src.log import get_logger

logger = get_logger(__name__)

DEFAULT_NODE_CAP = 10**7
MERGE_DECIMALS = 12
# monomial rows evaluated per block in polynomial_exactness_check
EXACTNESS_CHUNK = 512
# recurrence values above this are folded into a log scale
HERMITE_RESCALE = 1e100

MultiIndex = tuple


# ----------------------------
# Domain type
# ----------------------------
@dataclass(frozen=True)
class QuadratureRule:
    """Nodes (D x d) and weights (D,) approximating E[f(w)] for w ~ N(0, I_d).

    ``degree`` is the highest total polynomial degree the rule integrates
    exactly (before any subsampling).
    """

    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if nodes.ndim == 1:
            nodes = nodes.reshape(-1, 1)
        if nodes.ndim != 2 or nodes.shape[0] != weights.shape[0] or weights.size == 0:
            raise InvalidArgumentError(
                f"rule needs D >= 1 nodes with one weight each, got nodes {nodes.shape} "
                f"and weights {weights.shape}"
            )
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def dimension(self):
        return self.nodes.shape[1]

    @property
    def size(self):
        return self.nodes.shape[0]

    @property
    def is_nonnegative(self):
        return bool(np.all(self.weights >= 0))

    def integrate(self, f):
        """Apply the rule to a vectorised integrand f(nodes) -> (D,)."""
        return float(np.dot(self.weights, f(self.nodes)))

    def to_frame(self):
        cols = {f"omega_{l + 1}": self.nodes[:, l] for l in range(self.dimension)}
        cols["weight"] = self.weights
        return pd.DataFrame(cols)

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path, degree):
        frame = pd.read_csv(path)
        omega_cols = [c for c in frame.columns if c.startswith("omega_")]
        return cls(frame[omega_cols].to_numpy(), frame["weight"].to_numpy(), degree)


# ----------------------------
# Multi-indices and moments
# ----------------------------
def _compositions(total, parts):
    """All tuples of `parts` non-negative ints summing to `total`, descending lex."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def multi_indices(d, max_degree):
    """Every r in N^d with sum(r) <= max_degree, graded then descending lex order."""
    if d < 1 or max_degree < 0:
        raise InvalidArgumentError(f"need d >= 1 and max_degree >= 0, got {d}, {max_degree}")
    out = []
    for n in range(max_degree + 1):
        out.extend(_compositions(n, d))
    return out


def _normal_moment(k):
    # E[w^k] for w ~ N(0,1): (k-1)!! for even k, 0 for odd k
    if k % 2:
        return 0
    return math.prod(range(k - 1, 0, -2))


def gaussian_moment(r):
    """Mixed moment E[prod_l w_l^{r_l}] of the standard normal in len(r) dims."""
    if any(k < 0 for k in r):
        raise InvalidArgumentError(f"multi-index entries must be >= 0, got {tuple(r)}")
    return float(math.prod(_normal_moment(int(k)) for k in r))


def monomial_matrix(points, indices):
    """A[j, i] = prod_l points[i, l] ** indices[j][l]."""
    points = np.asarray(points, dtype=float)
    exps = np.asarray(indices, dtype=int).reshape(len(indices), points.shape[1])
    max_power = int(exps.max()) if exps.size else 0
    out = np.ones((exps.shape[0], points.shape[0]))
    for l in range(points.shape[1]):
        powers = points[:, l][None, :] ** np.arange(max_power + 1)[:, None]
        out *= powers[exps[:, l]]
    return out


# ----------------------------
# 1-D Gauss-Hermite
# ----------------------------
def _log_orthonormal_hermite(x, n):
    """log |h_n(x)| with h_k = He_k / sqrt(k!), rescaling as the recurrence grows."""
    prev, cur = np.zeros_like(x), np.ones_like(x)
    log_scale = np.zeros_like(x)
    for k in range(n):
        prev, cur = cur, (x * cur - math.sqrt(k) * prev) / math.sqrt(k + 1)
        scale = np.maximum(np.abs(cur), 1.0)
        scale = np.where(scale > HERMITE_RESCALE, scale, 1.0)
        prev, cur = prev / scale, cur / scale
        log_scale += np.log(scale)
    return np.log(np.abs(cur)) + log_scale


def gauss_hermite_nodes(m):
    """m-point Gauss-Hermite rule for the N(0,1) density.

    Nodes by Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
    recurrence He_{k+1} = w He_k - k He_{k-1}: zero diagonal, off-diagonal sqrt(k).
    Weights from w_i = 1 / (m h_{m-1}(x_i)^2), evaluated in log space so tail
    weights stay positive for m in the hundreds.
    """
    if m < 1:
        raise InvalidArgumentError(f"number of nodes must be >= 1, got {m}")
    if m == 1:
        return np.zeros(1), np.ones(1)

    diag = np.zeros(m)
    off = np.sqrt(np.arange(1, m, dtype=float))
    nodes = eigh_tridiagonal(diag, off, eigvals_only=True)

    # exact symmetry about 0
    nodes = 0.5 * (nodes - nodes[::-1])
    if m % 2:
        nodes[m // 2] = 0.0
    log_weights = -2.0 * _log_orthonormal_hermite(nodes, m - 1)
    weights = np.exp(log_weights - log_weights.max())
    weights = 0.5 * (weights + weights[::-1])
    return nodes, weights / weights.sum()


# ----------------------------
# Grids
# ----------------------------
def dense_grid_rule(d, m, cap=DEFAULT_NODE_CAP):
    """Tensor product of d copies of the m-point rule; exact to degree 2m-1."""
    if d < 1 or m < 1:
        raise InvalidArgumentError(f"need d >= 1 and m >= 1, got d={d}, m={m}")
    if m**d > cap:
        raise ResourceLimitError(f"dense grid would hold {m}^{d} = {m**d} nodes (cap {cap})")

    x, w = gauss_hermite_nodes(m)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    nodes = np.stack(grids, axis=-1).reshape(-1, d)
    weights = reduce(np.kron, [w] * d)
    return QuadratureRule(nodes, weights, 2 * m - 1)


def _smolyak_terms(d, level):
    """(combination coefficient, per-axis point counts) for the Smolyak sum."""
    q = level + d - 1
    for s in range(max(d, q - d + 1), q + 1):
        coeff = (-1) ** (q - s) * math.comb(d - 1, q - s)
        for excess in _compositions(s - d, d):
            yield coeff, tuple(e + 1 for e in excess)


def sparse_grid_rule(d, level, cap=DEFAULT_NODE_CAP):
    """Smolyak combination of Gauss-Hermite rules, exact to total degree 2*level-1.

    Level i along an axis uses the i-point rule. Coincident nodes are merged by
    summing weights; weights may come out negative.
    """
    if d < 1 or level < 1:
        raise InvalidArgumentError(f"need d >= 1 and level >= 1, got d={d}, level={level}")

    terms = list(_smolyak_terms(d, level))
    raw_size = sum(math.prod(counts) for _, counts in terms)
    if raw_size > cap:
        raise ResourceLimitError(f"sparse grid would expand {raw_size} nodes (cap {cap})")

    rules_1d = {m: gauss_hermite_nodes(m) for m in range(1, level + 1)}
    merged = {}
    for coeff, counts in terms:
        axes_x = [rules_1d[m][0] for m in counts]
        axes_w = [rules_1d[m][1] for m in counts]
        for idx in itertools.product(*[range(m) for m in counts]):
            node = tuple(axes_x[l][i] for l, i in enumerate(idx))
            weight = coeff * math.prod(axes_w[l][i] for l, i in enumerate(idx))
            key = tuple(np.round(node, MERGE_DECIMALS) + 0.0)
            if key in merged:
                entry = merged[key]
                entry[1] += weight
                entry[2] += abs(weight)
            else:
                merged[key] = [node, weight, abs(weight)]

    # drop nodes whose contributions cancelled to round-off
    kept = [(n, w) for n, w, scale in merged.values() if abs(w) > 1e-14 * scale]
    nodes = np.array([n for n, _ in kept], dtype=float).reshape(-1, d)
    weights = np.array([w for _, w in kept], dtype=float)
    logger.debug("sparse grid d=%d level=%d: %d raw, %d merged nodes", d, level, raw_size, len(kept))
    return QuadratureRule(nodes, weights, 2 * level - 1)


def sparse_grid_for_degree(d, degree, cap=DEFAULT_NODE_CAP):
    """Smallest Smolyak rule exact to at least `degree`."""
    level = max(1, math.ceil((degree + 1) / 2))
    return sparse_grid_rule(d, level, cap=cap)


# ----------------------------
# Weight fitting and subsampling
# ----------------------------
def nnls_weights(points, R):
    """Non-negative weights matching all Gaussian moments of total degree <= R.

    Returns (weights, residual_norm). Odd moments are kept as constraints.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if not np.all(np.isfinite(points)):
        raise InvalidArgumentError("points contain NaN or Inf")
    if R < 0:
        raise InvalidArgumentError(f"degree must be >= 0, got {R}")

    indices = multi_indices(points.shape[1], R)
    A = monomial_matrix(points, indices)
    b = np.array([gaussian_moment(r) for r in indices])
    weights, residual = nnls(A, b, maxiter=max(100, 10 * A.shape[1]))
    logger.debug("nnls on %d points, %d constraints: residual %.3e", points.shape[0], len(indices), residual)
    return weights, float(residual)


def subsample_rule(rule, target, seed):
    """Draw `target` nodes i.i.d. with probability |a_i| / sum|a|.

    Each draw carries weight sign(a_i) * sum|a| / target, so the result is an
    unbiased estimate of the parent rule. Duplicated draws stay separate.
    """
    if target < 1:
        raise InvalidArgumentError(f"target must be >= 1, got {target}")
    magnitude = np.abs(rule.weights)
    total = magnitude.sum()
    if total == 0:
        raise InvalidArgumentError("cannot subsample a rule whose weights are all zero")

    rng = np.random.default_rng(seed)
    picks = rng.choice(rule.size, size=target, replace=True, p=magnitude / total)
    weights = np.sign(rule.weights[picks]) * total / target
    return QuadratureRule(rule.nodes[picks], weights, rule.degree)


def rectify_rule(rule):
    """Clip negative weights to zero and rescale the rest to total weight 1.

    Node count is unchanged so the feature dimension stays 2 * size.
    """
    if rule.is_nonnegative:
        return rule
    clipped = np.clip(rule.weights, 0.0, None)
    if clipped.sum() == 0:
        raise InvalidArgumentError("rule has no positive weight to keep")
    n_neg = int(np.sum(rule.weights < 0))
    logger.warning("rectified %d of %d negative quadrature weights", n_neg, rule.size)
    return QuadratureRule(rule.nodes, clipped / clipped.sum(), rule.degree)


# ----------------------------
# Exactness oracle
# ----------------------------
def polynomial_exactness_check(rule, R):
    """max over |r| <= R of |sum_i a_i w_i^r - E[w^r]|."""
    indices = multi_indices(rule.dimension, R)
    worst = 0.0
    for start in range(0, len(indices), EXACTNESS_CHUNK):
        block = indices[start:start + EXACTNESS_CHUNK]
        approx = monomial_matrix(rule.nodes, block) @ rule.weights
        exact = np.array([gaussian_moment(r) for r in block])
        worst = max(worst, float(np.max(np.abs(approx - exact))))
    return worst
