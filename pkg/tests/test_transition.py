import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from patchcrf.exceptions import DimensionMismatch
from patchcrf.gmm import DiagonalGaussianMixture
from patchcrf.transition import (build_transition_matrix, kl_matrix, mc_kl_divergence,
                                 transition_from_divergences)


def gauss(mu, var):
    return DiagonalGaussianMixture.from_params([1.0], [[mu]], [[var]])


def random_gmm(rng, d=3):
    k = int(rng.integers(1, 4))
    return DiagonalGaussianMixture.from_params(
        rng.dirichlet(np.ones(k)), rng.normal(0, 2, (k, d)), rng.uniform(0.3, 2, (k, d)))


def test_identical_mixtures_zero():
    g = DiagonalGaussianMixture.from_params([0.4, 0.6], [[0.0, 1.0], [2.0, 0.0]],
                                            [[1.0, 1.0], [0.5, 2.0]])
    assert mc_kl_divergence(g, g, 1000, random_state=0) == 0.0


def test_kl_mean_shift():
    assert mc_kl_divergence(gauss(0, 1), gauss(1, 1), 100_000, 0) == pytest.approx(0.5, abs=0.02)


def test_kl_variance_change():
    # 0.5 * (ln 4 + 1/4 - 1)
    exact = 0.5 * (np.log(4.0) + 0.25 - 1.0)
    assert exact == pytest.approx(0.31815, abs=1e-5)
    assert mc_kl_divergence(gauss(0, 1), gauss(0, 4), 100_000, 0) == pytest.approx(exact, abs=0.02)


def test_kl_dimension_mismatch():
    g3 = DiagonalGaussianMixture.from_params([1.0], [[0, 0, 0]], [[1, 1, 1]])
    with pytest.raises(DimensionMismatch):
        mc_kl_divergence(gauss(0, 1), g3, 10)


def test_softmax_examples():
    assert np.allclose(transition_from_divergences(np.zeros((2, 2))), 0.5, atol=1e-12)
    Q = transition_from_divergences(np.array([[0.0, np.log(3.0)], [np.log(3.0), 0.0]]))
    assert np.allclose(Q[0], [0.75, 0.25], atol=1e-12)
    assert np.array_equal(transition_from_divergences(np.zeros((1, 1))), [[1.0]])


def test_exclude_self_normaliser():
    D = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 2.0, 0.0]])
    Q = transition_from_divergences(D, include_self=False)
    off = ~np.eye(3, dtype=bool)
    assert np.allclose(np.where(off, Q, 0).sum(axis=1), 1.0)
    assert np.allclose(np.diag(Q), 1.0 / np.exp(-D).sum(axis=1, where=off))
    with pytest.raises(ValueError):
        transition_from_divergences(np.zeros((1, 1)), include_self=False)


def test_huge_divergence_stays_positive():
    Q = transition_from_divergences(np.array([[0.0, 1e6], [1e6, 0.0]]))
    assert (Q > 0).all() and np.isfinite(np.log(Q)).all()


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
@settings(max_examples=15, deadline=None)
def test_rows_sum_to_one(seed, m):
    rng = np.random.default_rng(seed)
    gmms = [random_gmm(rng) for _ in range(m)]
    Q = build_transition_matrix(gmms, n_samples=500, random_state=seed % 1000)
    assert Q.shape == (m, m)
    assert np.allclose(Q.sum(axis=1), 1.0, atol=1e-12)


def test_identical_class_mixtures_uniform():
    rng = np.random.default_rng(0)
    g = random_gmm(rng)
    for m in (2, 3, 5):
        Q = build_transition_matrix([g] * m, n_samples=200)
        assert np.allclose(Q, 1.0 / m, atol=1e-12)


def test_kl_matrix_thread_independent():
    rng = np.random.default_rng(4)
    gmms = [random_gmm(rng) for _ in range(4)]
    a = kl_matrix(gmms, n_samples=300, random_state=11, n_jobs=1)
    b = kl_matrix(gmms, n_samples=300, random_state=11, n_jobs=8)
    assert np.array_equal(a, b)
    assert np.array_equal(np.diag(a), np.zeros(4))
    assert (a >= 0).all()
