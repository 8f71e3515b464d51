import numpy as np
import pytest

from src.analysis.eigenspectrum import (
    GramSpec,
    average_spectra,
    eigenspectrum,
    energy_fraction,
    gram_matrix,
    numerical_rank,
    spectra_frame,
)
from src.errors import InvalidArgumentError, ResourceLimitError
from src.features.feature_maps import build_gq, build_rff1, build_rff2, build_taylor, map as feature_map
from src.features.quadrature import dense_grid_rule


@pytest.fixture
def points(rng):
    return rng.uniform(-1, 1, (100, 7))


def _maps(d):
    return [
        build_rff1(d, 20, 0.7, seed=1),
        build_rff2(d, 20, 0.7, seed=1),
        build_gq(d, 0.7, dense_grid_rule(d, 3), target=10, seed=1),
        build_taylor(d, 1, 0.7),
    ]


class TestGram:
    def test_single_point(self):
        np.testing.assert_array_equal(gram_matrix(GramSpec(np.zeros((1, 3)), 1.0)), [[1.0]])

    def test_duplicate_rows(self, rng):
        X = rng.uniform(-1, 1, (4, 2))
        X = np.vstack([X, X[1]])
        G = gram_matrix(GramSpec(X, 0.5))
        np.testing.assert_allclose(G[4], G[1])

    def test_exactly_symmetric(self, points):
        for fm in [None] + _maps(7):
            G = gram_matrix(GramSpec(points, 0.7, fm))
            np.testing.assert_array_equal(G, G.T)

    def test_feature_gram_is_stacked_inner_products(self, points):
        for fm in _maps(7):
            Z = np.vstack([feature_map(fm, x) for x in points])
            np.testing.assert_allclose(gram_matrix(GramSpec(points, 0.7, fm)), Z @ Z.T, atol=1e-12)

    def test_positive_semidefinite_for_every_source(self, rng):
        X = rng.uniform(-1, 1, (50, 7))
        for fm in [None] + _maps(7):
            G = gram_matrix(GramSpec(X, 0.7, fm))
            vals = np.linalg.eigvalsh(G)
            assert vals[0] >= -1e-10 * vals[-1], fm

    def test_cap(self, rng):
        with pytest.raises(ResourceLimitError):
            gram_matrix(GramSpec(rng.uniform(size=(6, 2)), 1.0), cap=5)

    def test_label(self):
        assert GramSpec(np.zeros((1, 7)), 1.0).label == "exact"
        assert GramSpec(np.zeros((1, 7)), 1.0, build_taylor(7, 1, 1.0)).label == "ts"


class TestSpectrum:
    def test_identity(self):
        np.testing.assert_allclose(eigenspectrum(np.eye(3)), [1.0, 1.0, 1.0])

    def test_rank_one(self):
        v = np.array([1.0, 2.0, 2.0])
        np.testing.assert_allclose(eigenspectrum(np.outer(v, v)), [9.0, 0.0, 0.0], atol=1e-10)

    def test_descending(self, points):
        vals = eigenspectrum(gram_matrix(GramSpec(points, 0.7)))
        assert np.all(np.diff(vals) <= 0)

    def test_indefinite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            eigenspectrum(np.diag([1.0, -1.0]))

    def test_non_square_rejected(self):
        with pytest.raises(InvalidArgumentError):
            eigenspectrum(np.ones((2, 3)))

    def test_exact_kernel_full_rank(self, points):
        vals = eigenspectrum(gram_matrix(GramSpec(points, 0.7)))
        assert vals[-1] > 1e-12 * vals[0]
        assert numerical_rank(vals, 1e-12) == 100

    def test_feature_rank_bounded_by_dimension(self, points):
        for fm in _maps(7):
            vals = eigenspectrum(gram_matrix(GramSpec(points, 0.7, fm)))
            assert numerical_rank(vals, 1e-8) <= fm.output_dim


class TestAveraging:
    def test_energy_fraction(self):
        assert energy_fraction([3.0, 1.0, 0.0], 1) == pytest.approx(0.75)

    def test_index_wise_mean(self):
        mean, std = average_spectra([np.array([4.0, 2.0]), np.array([2.0, 0.0])])
        np.testing.assert_allclose(mean, [3.0, 1.0])
        np.testing.assert_allclose(std, [1.0, 1.0])

    def test_frame_layout(self):
        frame = spectra_frame({"exact": [np.array([2.0, 1.0])], "ts": [np.array([1.5, 0.5])]}, config_hash="abc")
        assert list(frame.columns) == ["index", "exact_mean", "exact_std", "ts_mean", "ts_std", "config_hash"]
        assert frame["index"].tolist() == [1, 2]
