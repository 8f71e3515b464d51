# src/filters/kernel_trick.py
"""
Kernel-trick baselines: KLMS, QKLMS, FB-QKLMS and KRLS.

All of them keep a dictionary of centers with coefficients and predict with
f(x) = sum_i alpha_i k(c_i, x), so per-step cost grows with the dictionary.
"""

from dataclasses import dataclass, field

import numpy as np

from src.errors import InvalidArgumentError, NumericalBreakdownError

INITIAL_CAPACITY = 64


@dataclass
class Dictionary:
    """Growing center set. Storage is over-allocated; rows [:size] are live."""

    input_dim: int
    bandwidth: float
    learning_rate: float = 0.1
    q_factor: float = 0.0
    budget: float = np.inf
    significance_decay: float = 1.0
    regularizer: float = 1.0
    size: int = 0
    _centers: np.ndarray = field(default=None, repr=False)
    _coefficients: np.ndarray = field(default=None, repr=False)
    _significance: np.ndarray = field(default=None, repr=False)
    Q: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InvalidArgumentError(f"bandwidth must be > 0, got {self.bandwidth}")
        if self._centers is None:
            self._centers = np.empty((INITIAL_CAPACITY, self.input_dim))
            self._coefficients = np.empty(INITIAL_CAPACITY)
            self._significance = np.empty(INITIAL_CAPACITY)
        if self.Q is None:
            self.Q = np.empty((0, 0))

    @property
    def centers(self):
        return self._centers[: self.size]

    @property
    def coefficients(self):
        return self._coefficients[: self.size]

    @property
    def significance(self):
        return self._significance[: self.size]

    def kernel_column(self, x):
        """h_i = k(c_i, x) for every live center."""
        diff = self.centers - x
        return np.exp(-np.einsum("ij,ij->i", diff, diff) / (2.0 * self.bandwidth**2))

    def evaluate(self, x):
        if self.size == 0:
            return 0.0
        return float(self.coefficients @ self.kernel_column(x))

    def append(self, x, coefficient):
        if self.size == self._centers.shape[0]:
            grow = 2 * self._centers.shape[0]
            self._centers = np.resize(self._centers, (grow, self.input_dim))
            self._coefficients = np.resize(self._coefficients, grow)
            self._significance = np.resize(self._significance, grow)
        self._centers[self.size] = x
        self._coefficients[self.size] = coefficient
        self._significance[self.size] = abs(coefficient)
        self.size += 1

    def remove(self, index):
        last = self.size - 1
        for buf in (self._centers, self._coefficients, self._significance):
            buf[index:last] = buf[index + 1 : self.size]
        self.size = last


def _check_point(dct, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (dct.input_dim,):
        raise InvalidArgumentError(f"expected a point of length {dct.input_dim}, got shape {x.shape}")
    return x


# ----------------------------
# Steps (update dictionary in place, return it with the a-priori error)
# ----------------------------
def klms_step(dct, x, y):
    x = _check_point(dct, x)
    e = float(y - dct.evaluate(x))
    dct.append(x, dct.learning_rate * e)
    return dct, e


def _quantized_update(dct, x, e):
    """Merge into the nearest center if its squared distance is within q_factor,
    else add a center.

    Returns the index of the center that received the update.
    """
    if dct.size:
        diff = dct.centers - x
        sq_dist = np.einsum("ij,ij->i", diff, diff)
        nearest = int(np.argmin(sq_dist))
        if sq_dist[nearest] <= dct.q_factor:
            dct._coefficients[nearest] += dct.learning_rate * e
            return nearest
    dct.append(x, dct.learning_rate * e)
    return dct.size - 1


def qklms_step(dct, x, y):
    x = _check_point(dct, x)
    e = float(y - dct.evaluate(x))
    _quantized_update(dct, x, e)
    return dct, e


def fbqklms_step(dct, x, y):
    """QKLMS with a hard budget.

    Significance of a center is |alpha_i| when its coefficient was last touched,
    decayed by `significance_decay` every step. Over budget, the least
    significant center is dropped.
    """
    x = _check_point(dct, x)
    e = float(y - dct.evaluate(x))
    dct._significance[: dct.size] *= dct.significance_decay
    touched = _quantized_update(dct, x, e)
    dct._significance[touched] = abs(dct._coefficients[touched])
    while dct.size > dct.budget:
        dct.remove(int(np.argmin(dct.significance)))
    return dct, e


def krls_step(dct, x, y):
    """Growing KRLS: extend Q = (lambda I + K)^-1 by one bordered row/column."""
    x = _check_point(dct, x)
    lam = dct.regularizer
    kxx = 1.0

    if dct.size == 0:
        r = lam + kxx
        e = float(y)
        dct.Q = np.array([[1.0 / r]])
        dct.append(x, e / r)
        return dct, e

    h = dct.kernel_column(x)
    zeta = dct.Q @ h
    r = lam + kxx - zeta @ h
    if not r > 0:
        raise NumericalBreakdownError(f"KRLS innovation r = {r:.3e} <= 0; the regularizer is too small")
    e = float(y - dct.coefficients @ h)

    n = dct.size
    Q = np.empty((n + 1, n + 1))
    Q[:n, :n] = dct.Q + np.outer(zeta, zeta) / r
    Q[:n, n] = -zeta / r
    Q[n, :n] = -zeta / r
    Q[n, n] = 1.0 / r
    dct.Q = Q

    dct._coefficients[:n] -= zeta * (e / r)
    dct.append(x, e / r)
    return dct, e


_STEPS = {"klms": klms_step, "qklms": qklms_step, "fbqklms": fbqklms_step, "krls": krls_step}


# ----------------------------
# Streaming wrapper
# ----------------------------
class KernelTrickFilter:
    kernel_trick = True

    def __init__(self, rule, input_dim, bandwidth, **hyper):
        if rule not in _STEPS:
            raise InvalidArgumentError(f"unknown kernel-trick rule {rule!r}")
        if rule == "krls" and not hyper.get("regularizer", 1.0) > 0:
            raise InvalidArgumentError("KRLS regularizer must be > 0")
        self.rule = rule
        q_factor = hyper.get("q_factor", 0.0)
        if rule in ("qklms", "fbqklms") and not q_factor > 0:
            raise InvalidArgumentError(f"{rule} needs q_factor > 0, got {q_factor}")
        self.dictionary = Dictionary(
            input_dim=input_dim,
            bandwidth=bandwidth,
            learning_rate=hyper.get("learning_rate", 0.1),
            q_factor=q_factor,
            budget=hyper.get("budget", np.inf),
            significance_decay=hyper.get("significance_decay", 1.0),
            regularizer=hyper.get("regularizer", 1.0),
        )
        self._step = _STEPS[rule]

    @property
    def size(self):
        return self.dictionary.size

    def encode(self, X):
        return np.atleast_2d(np.asarray(X, dtype=float))

    def update(self, x, y):
        self.dictionary, e = self._step(self.dictionary, x, y)
        return e

    def predict_encoded(self, X):
        dct = self.dictionary
        X = np.atleast_2d(X)
        if dct.size == 0:
            return np.zeros(X.shape[0])
        diff = X[:, None, :] - dct.centers[None, :, :]
        K = np.exp(-np.einsum("ijk,ijk->ij", diff, diff) / (2.0 * dct.bandwidth**2))
        return K @ dct.coefficients

    def predict(self, X):
        return self.predict_encoded(self.encode(X))
