# src/filters/no_trick.py
"""
Linear adaptive filters run on explicit feature vectors.

With a FeatureMap these are the no-trick kernel filters (NT-KLMS, NT-KRLS,
NT-Ex-KRLS); without one they are the plain linear LMS / RLS baselines on the
raw embedded input. Per-step cost is O(D) for LMS and O(D^2) for the RLS
family, independent of how many samples have been seen.
"""

from dataclasses import dataclass

import numpy as np

from src.errors import InvalidArgumentError
from src.features.feature_maps import transform


@dataclass
class FilterState:
    """Weights w, plus inverse covariance P for the RLS family."""

    weights: np.ndarray
    inv_covariance: np.ndarray = None
    learning_rate: float = 0.1
    forgetting: float = 1.0
    delta_init: float = 1.0
    alpha: float = 1.0
    process_noise: float = 0.0

    @property
    def dim(self):
        return self.weights.shape[0]


def init_lms_state(D, learning_rate):
    return FilterState(weights=np.zeros(D), learning_rate=learning_rate)


def init_rls_state(D, forgetting=1.0, delta_init=1.0, alpha=1.0, process_noise=0.0):
    if not 0.0 < forgetting <= 1.0:
        raise InvalidArgumentError(f"forgetting factor must lie in (0, 1], got {forgetting}")
    if not delta_init > 0:
        raise InvalidArgumentError(f"delta_init must be > 0, got {delta_init}")
    return FilterState(
        weights=np.zeros(D),
        inv_covariance=delta_init * np.eye(D),
        forgetting=forgetting,
        delta_init=delta_init,
        alpha=alpha,
        process_noise=process_noise,
    )


def _check(state, z):
    z = np.asarray(z, dtype=float)
    if z.shape != (state.dim,):
        raise InvalidArgumentError(f"expected a feature vector of length {state.dim}, got shape {z.shape}")
    return z


# ----------------------------
# Steps (update state in place, return it with the a-priori error)
# ----------------------------
def lms_step(state, z, y):
    """e = y - w.z ; w <- w + eta e z"""
    z = _check(state, z)
    e = float(y - state.weights @ z)
    state.weights += state.learning_rate * e * z
    return state, e


def rls_step(state, z, y):
    z = _check(state, z)
    P = state.inv_covariance
    lam = state.forgetting

    Pz = P @ z
    g = Pz / (lam + z @ Pz)
    e = float(y - state.weights @ z)

    P = (P - np.outer(g, Pz)) / lam
    state.inv_covariance = 0.5 * (P + P.T)
    state.weights = state.weights + g * e
    return state, e


def exrls_step(state, z, y):
    """RLS with the scalar state model w_n = alpha w_{n-1} + process noise (q I)."""
    z = _check(state, z)
    P = state.inv_covariance
    lam, a, q = state.forgetting, state.alpha, state.process_noise

    Pz = P @ z
    k = Pz / (lam + z @ Pz)
    e = float(y - state.weights @ z)

    P = a * a * (P - np.outer(k, Pz)) / lam
    if q:
        P[np.diag_indices_from(P)] += lam * q
    state.inv_covariance = 0.5 * (P + P.T)
    state.weights = a * state.weights + a * k * e
    return state, e


_STEPS = {"lms": lms_step, "rls": rls_step, "exrls": exrls_step}


# ----------------------------
# Streaming wrapper
# ----------------------------
class NoTrickFilter:
    """A step rule bound to an optional feature map.

    `encode` turns raw inputs into the vectors the rule sees, so a harness can
    map a whole split once and then stream rows through `update`.
    """

    kernel_trick = False

    def __init__(self, rule, feature_map=None, input_dim=None, **hyper):
        if rule not in _STEPS:
            raise InvalidArgumentError(f"unknown no-trick rule {rule!r}")
        if feature_map is None and input_dim is None:
            raise InvalidArgumentError("need either a feature map or the raw input dimension")
        self.rule = rule
        self.feature_map = feature_map
        D = feature_map.output_dim if feature_map is not None else input_dim
        if rule == "lms":
            self.state = init_lms_state(D, hyper.get("learning_rate", 0.1))
        else:
            self.state = init_rls_state(
                D,
                forgetting=hyper.get("forgetting", 1.0),
                delta_init=hyper.get("delta_init", 1.0),
                alpha=hyper.get("alpha", 1.0),
                process_noise=hyper.get("process_noise", 0.0),
            )
        self._step = _STEPS[rule]

    @property
    def size(self):
        return self.state.dim

    def encode(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.feature_map is None:
            return X
        return transform(self.feature_map, X)

    def update(self, u, y):
        """One training step on an encoded vector; returns the a-priori error."""
        self.state, e = self._step(self.state, u, y)
        return e

    def predict_encoded(self, U):
        return np.atleast_2d(U) @ self.state.weights

    def predict(self, X):
        return self.predict_encoded(self.encode(X))
