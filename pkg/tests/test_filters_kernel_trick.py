import numpy as np
import pytest

from src.errors import InvalidArgumentError, NumericalBreakdownError
from src.features.feature_maps import gaussian_kernel_matrix
from src.filters import load_checkpoint, make_filter, save_checkpoint
from src.filters.kernel_trick import (
    INITIAL_CAPACITY,
    Dictionary,
    KernelTrickFilter,
    fbqklms_step,
    klms_step,
    krls_step,
    qklms_step,
)


class TestDictionary:
    def test_grows_past_initial_capacity(self, rng):
        dct = Dictionary(input_dim=2, bandwidth=1.0)
        X = rng.standard_normal((INITIAL_CAPACITY + 5, 2))
        for i, x in enumerate(X):
            dct.append(x, float(i))
        assert dct.size == INITIAL_CAPACITY + 5
        np.testing.assert_array_equal(dct.centers, X)
        np.testing.assert_array_equal(dct.coefficients, np.arange(INITIAL_CAPACITY + 5))

    def test_remove_keeps_order(self):
        dct = Dictionary(input_dim=1, bandwidth=1.0)
        for i in range(4):
            dct.append(np.array([float(i)]), float(i))
        dct.remove(1)
        np.testing.assert_array_equal(dct.centers[:, 0], [0.0, 2.0, 3.0])

    def test_bandwidth_must_be_positive(self):
        with pytest.raises(InvalidArgumentError):
            Dictionary(input_dim=1, bandwidth=0.0)


class TestKLMS:
    def test_one_center_per_sample(self, rng):
        dct = Dictionary(input_dim=3, bandwidth=1.0, learning_rate=0.5)
        dct, e = klms_step(dct, np.zeros(3), 2.0)
        assert e == 2.0
        assert dct.coefficients[0] == pytest.approx(1.0)
        for x in rng.standard_normal((9, 3)):
            dct, _ = klms_step(dct, x, 0.0)
        assert dct.size == 10

    def test_predict_matches_dictionary(self, rng):
        flt = make_filter("klms", 2, bandwidth=0.7, learning_rate=0.3)
        for x in rng.uniform(-1, 1, (25, 2)):
            flt.update(x, float(np.sin(x.sum())))
        X = rng.uniform(-1, 1, (6, 2))
        expected = [flt.dictionary.evaluate(x) for x in X]
        np.testing.assert_allclose(flt.predict(X), expected, atol=1e-12)
        assert flt.kernel_trick


class TestQuantized:
    def test_repeat_point_merges(self):
        flt = make_filter("qklms", 2, bandwidth=1.0, learning_rate=0.5, q_factor=0.1)
        x = np.array([0.3, -0.2])
        flt.update(x, 1.0)
        e = flt.update(x + 0.01, 1.0)
        assert flt.size == 1
        assert flt.dictionary.coefficients[0] == pytest.approx(0.5 + 0.5 * e)

    def test_far_point_adds_center(self):
        flt = make_filter("qklms", 2, bandwidth=1.0, learning_rate=0.5, q_factor=0.1)
        flt.update(np.zeros(2), 1.0)
        flt.update(np.ones(2), 1.0)
        assert flt.size == 2

    def test_threshold_is_on_squared_distance(self):
        # distance 0.2, squared 0.04
        flt = make_filter("qklms", 1, bandwidth=1.0, learning_rate=0.5, q_factor=0.05)
        flt.update(np.array([0.0]), 1.0)
        flt.update(np.array([0.2]), 1.0)
        assert flt.size == 1

        flt = make_filter("qklms", 1, bandwidth=1.0, learning_rate=0.5, q_factor=0.03)
        flt.update(np.array([0.0]), 1.0)
        flt.update(np.array([0.2]), 1.0)
        assert flt.size == 2

    def test_infinite_q_keeps_one_center(self, rng):
        flt = make_filter("qklms", 3, bandwidth=1.0, learning_rate=0.2, q_factor=np.inf)
        for x in rng.uniform(-1, 1, (50, 3)):
            flt.update(x, float(x.sum()))
        assert flt.size == 1

    def test_zero_q_follows_klms(self, rng):
        plain = Dictionary(input_dim=2, bandwidth=0.8, learning_rate=0.3)
        quantized = Dictionary(input_dim=2, bandwidth=0.8, learning_rate=0.3, q_factor=0.0)
        for x in rng.uniform(-1, 1, (80, 2)):
            y = float(np.sin(x).sum())
            plain, e_plain = klms_step(plain, x, y)
            quantized, e_quant = qklms_step(quantized, x, y)
            assert e_quant == pytest.approx(e_plain, abs=1e-12)
        assert quantized.size == plain.size == 80

    def test_unbounded_budget_follows_qklms(self, rng):
        quantized = Dictionary(input_dim=2, bandwidth=0.8, learning_rate=0.3, q_factor=0.02)
        budgeted = Dictionary(input_dim=2, bandwidth=0.8, learning_rate=0.3, q_factor=0.02,
                              significance_decay=0.9)
        for x in rng.uniform(-1, 1, (150, 2)):
            y = float(np.cos(x).sum())
            quantized, e_quant = qklms_step(quantized, x, y)
            budgeted, e_budget = fbqklms_step(budgeted, x, y)
            assert e_budget == pytest.approx(e_quant, abs=1e-12)
        assert budgeted.size == quantized.size
        np.testing.assert_array_equal(budgeted.centers, quantized.centers)

    def test_q_factor_required(self):
        with pytest.raises(InvalidArgumentError):
            make_filter("qklms", 2, bandwidth=1.0, q_factor=0.0)

    def test_budget_respected(self, rng):
        flt = make_filter("fbqklms", 3, bandwidth=0.5, learning_rate=0.4, q_factor=0.01, budget=15,
                          significance_decay=0.9)
        for x in rng.uniform(-1, 1, (100, 3)):
            flt.update(x, float(np.cos(x).sum()))
            assert flt.size <= 15
        assert flt.size == 15


class TestKRLS:
    def test_matches_batch_solution(self, rng):
        n, lam, sigma = 200, 1.0, 1.0
        X = rng.uniform(-1, 1, (n, 2))
        y = np.sin(3 * X[:, 0]) + X[:, 1] ** 2
        dct = Dictionary(input_dim=2, bandwidth=sigma, regularizer=lam)
        for x, t in zip(X, y):
            dct, _ = krls_step(dct, x, t)
        K = gaussian_kernel_matrix(X, X, sigma)
        batch = np.linalg.solve(lam * np.eye(n) + K, y)
        np.testing.assert_allclose(dct.coefficients, batch, atol=1e-8)
        np.testing.assert_allclose(dct.Q, np.linalg.inv(lam * np.eye(n) + K), atol=1e-8)

    def test_breakdown_on_vanishing_regularizer(self):
        dct = Dictionary(input_dim=1, bandwidth=1.0, regularizer=1e-20)
        dct, _ = krls_step(dct, np.array([0.5]), 1.0)
        with pytest.raises(NumericalBreakdownError):
            krls_step(dct, np.array([0.5]), 1.0)

    def test_regularizer_must_be_positive(self):
        with pytest.raises(InvalidArgumentError):
            KernelTrickFilter("krls", 2, 1.0, regularizer=0.0)


def test_needs_bandwidth():
    with pytest.raises(InvalidArgumentError):
        make_filter("klms", 2)


def test_checkpoint_resumes(tmp_path, rng):
    flt = make_filter("fbqklms", 2, bandwidth=0.8, learning_rate=0.3, q_factor=0.05, budget=20,
                      significance_decay=0.95)
    X = rng.uniform(-1, 1, (60, 2))
    y = np.tanh(X.sum(axis=1))
    for x, t in zip(X[:30], y[:30]):
        flt.update(x, t)

    path = tmp_path / "fbqklms.npz"
    save_checkpoint(flt, path)
    resumed = load_checkpoint(path)
    for x, t in zip(X[30:], y[30:]):
        assert resumed.update(x, t) == pytest.approx(flt.update(x, t))
    np.testing.assert_allclose(resumed.dictionary.coefficients, flt.dictionary.coefficients)
