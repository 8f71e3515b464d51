import numpy as np
import pytest

from src.errors import InvalidArgumentError
from src.features.feature_maps import build_taylor, transform
from src.filters import load_checkpoint, make_filter, save_checkpoint
from src.filters.no_trick import NoTrickFilter, exrls_step, init_lms_state, init_rls_state, lms_step, rls_step


class TestLMS:
    def test_single_step(self):
        state = init_lms_state(2, 0.1)
        state, e = lms_step(state, np.array([1.0, 2.0]), 1.0)
        assert e == 1.0
        np.testing.assert_allclose(state.weights, [0.1, 0.2])

    def test_error_is_a_priori(self):
        state = init_lms_state(1, 0.5)
        state, _ = lms_step(state, np.array([1.0]), 2.0)
        state, e = lms_step(state, np.array([1.0]), 2.0)
        assert e == pytest.approx(1.0)

    def test_dimension_checked(self):
        with pytest.raises(InvalidArgumentError):
            lms_step(init_lms_state(3, 0.1), np.ones(2), 0.0)

    def test_converges_on_noiseless_linear_target(self, rng):
        w_true = np.array([0.5, -1.0, 2.0])
        flt = NoTrickFilter("lms", input_dim=3, learning_rate=0.05)
        for x in rng.standard_normal((2000, 3)):
            flt.update(x, float(x @ w_true))
        np.testing.assert_allclose(flt.state.weights, w_true, atol=1e-6)


class TestRLS:
    def test_matches_batch_least_squares(self, rng):
        X = rng.standard_normal((200, 5))
        w_true = rng.standard_normal(5)
        y = X @ w_true
        flt = NoTrickFilter("rls", input_dim=5, delta_init=1e6)
        for x, t in zip(X, y):
            flt.update(x, t)
        w_batch = np.linalg.lstsq(X, y, rcond=None)[0]
        np.testing.assert_allclose(flt.state.weights, w_batch, rtol=1e-4)

    def test_covariance_stays_symmetric(self, rng):
        state = init_rls_state(4, forgetting=0.98)
        for _ in range(50):
            state, _ = rls_step(state, rng.standard_normal(4), rng.standard_normal())
        np.testing.assert_array_equal(state.inv_covariance, state.inv_covariance.T)

    @pytest.mark.parametrize("lam", [0.0, 1.5])
    def test_forgetting_range(self, lam):
        with pytest.raises(InvalidArgumentError):
            init_rls_state(3, forgetting=lam)

    def test_delta_must_be_positive(self):
        with pytest.raises(InvalidArgumentError):
            init_rls_state(3, delta_init=0.0)


class TestExRLS:
    def test_reduces_to_rls(self, rng):
        a = init_rls_state(3, forgetting=0.99)
        b = init_rls_state(3, forgetting=0.99)
        for _ in range(30):
            z, y = rng.standard_normal(3), rng.standard_normal()
            a, ea = rls_step(a, z, y)
            b, eb = exrls_step(b, z, y)
            assert ea == pytest.approx(eb)
        np.testing.assert_allclose(a.weights, b.weights)
        np.testing.assert_allclose(a.inv_covariance, b.inv_covariance)

    def test_state_transition_scales_update(self):
        alpha = 0.9
        state = init_rls_state(2, alpha=alpha)
        z = np.array([1.0, 0.0])
        state, e = exrls_step(state, z, 2.0)
        # k = P z / (1 + z P z) = [0.5, 0]
        np.testing.assert_allclose(state.weights, [alpha * 0.5 * 2.0, 0.0])
        np.testing.assert_allclose(state.inv_covariance, alpha**2 * np.diag([0.5, 1.0]))

    def test_process_noise_inflates_covariance(self):
        state = init_rls_state(2, process_noise=0.1)
        state, _ = exrls_step(state, np.array([1.0, 0.0]), 0.0)
        np.testing.assert_allclose(np.diag(state.inv_covariance), [0.6, 1.1])

    def test_tracks_rotating_weights_better_than_rls(self, rng):
        n, turn = 3000, 2 * np.pi / 2000
        X = rng.standard_normal((n, 2))
        angles = turn * np.arange(n)
        W = np.column_stack([np.cos(angles), np.sin(angles)])
        y = np.einsum("ij,ij->i", X, W) + 0.01 * rng.standard_normal(n)

        rls = NoTrickFilter("rls", input_dim=2, delta_init=100.0)
        exrls = NoTrickFilter("exrls", input_dim=2, delta_init=100.0, alpha=0.999, process_noise=1e-3)
        err_rls = np.array([rls.update(x, t) for x, t in zip(X, y)])
        err_ex = np.array([exrls.update(x, t) for x, t in zip(X, y)])

        tail = slice(n - 500, n)
        assert np.mean(err_ex[tail] ** 2) <= np.mean(err_rls[tail] ** 2)
        assert np.mean(err_ex[tail] ** 2) < 0.05


class TestNoTrickFilter:
    def test_encode_uses_feature_map(self, rng):
        fm = build_taylor(3, 2, 1.0)
        flt = make_filter("lms", 3, feature_map=fm, learning_rate=0.2)
        X = rng.uniform(-1, 1, (6, 3))
        np.testing.assert_allclose(flt.encode(X), transform(fm, X))
        assert flt.size == 10
        assert not flt.kernel_trick

    def test_identity_baseline(self, rng):
        flt = make_filter("lms", 4, learning_rate=0.1)
        X = rng.uniform(-1, 1, (3, 4))
        np.testing.assert_array_equal(flt.encode(X), X)

    def test_learns_a_nonlinear_map(self, rng):
        fm = build_taylor(1, 5, 1.0)
        flt = make_filter("rls", 1, feature_map=fm, delta_init=100.0)
        X = rng.uniform(-1, 1, (300, 1))
        y = np.sin(2 * X[:, 0])
        U = flt.encode(X)
        for u, t in zip(U, y):
            flt.update(u, t)
        X_test = np.linspace(-0.9, 0.9, 20)[:, None]
        assert np.mean((flt.predict(X_test) - np.sin(2 * X_test[:, 0])) ** 2) < 1e-3

    def test_needs_map_or_dimension(self):
        with pytest.raises(InvalidArgumentError):
            NoTrickFilter("lms")

    def test_unknown_rule(self):
        with pytest.raises(InvalidArgumentError):
            make_filter("nlms", 3)


def test_checkpoint_resumes(tmp_path, rng):
    fm = build_taylor(2, 2, 1.0)
    X = rng.uniform(-1, 1, (40, 2))
    y = X[:, 0] * X[:, 1]
    flt = make_filter("exrls", 2, feature_map=fm, forgetting=0.99, alpha=0.999, process_noise=1e-4)
    U = flt.encode(X)
    for u, t in zip(U[:20], y[:20]):
        flt.update(u, t)

    path = tmp_path / "exrls.npz"
    save_checkpoint(flt, path)
    resumed = load_checkpoint(path, feature_map=fm)
    for u, t in zip(U[20:], y[20:]):
        assert resumed.update(u, t) == pytest.approx(flt.update(u, t))
    np.testing.assert_allclose(resumed.state.weights, flt.state.weights)


def test_exact_taylor_map_reproduces_klms(rng):
    # degree 12 at sigma 1 on [-0.5, 0.5]^2: truncation error below 1e-13
    fm = build_taylor(2, 12, 1.0)
    no_trick = make_filter("lms", 2, feature_map=fm, learning_rate=0.4)
    kernel = make_filter("klms", 2, bandwidth=1.0, learning_rate=0.4)

    X = rng.uniform(-0.5, 0.5, (200, 2))
    y = np.sin(3 * X[:, 0]) * X[:, 1]
    U = no_trick.encode(X)
    for x, u, t in zip(X, U, y):
        assert no_trick.update(u, t) == pytest.approx(kernel.update(x, t), abs=1e-6)

    X_test = rng.uniform(-0.5, 0.5, (20, 2))
    np.testing.assert_allclose(no_trick.predict(X_test), kernel.predict(X_test), atol=1e-6)
