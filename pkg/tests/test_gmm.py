import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from patchcrf.exceptions import DimensionMismatch, TooFewSamples
from patchcrf.gmm import DiagonalGaussianMixture

HALF_LOG_2PI = 0.5 * np.log(2 * np.pi)


def test_standard_normal_density():
    g = DiagonalGaussianMixture.from_params([1.0], [[0.0]], [[1.0]])
    assert g.log_density([0.0]) == pytest.approx(-0.918939, abs=1e-6)
    assert g.log_density([1.0]) == pytest.approx(-1.418939, abs=1e-6)


def test_duplicate_components_collapse():
    one = DiagonalGaussianMixture.from_params([1.0], [[0.3, -1.0]], [[2.0, 0.5]])
    two = DiagonalGaussianMixture.from_params([0.5, 0.5], [[0.3, -1.0]] * 2, [[2.0, 0.5]] * 2)
    X = np.random.default_rng(0).normal(size=(20, 2))
    assert np.allclose(one.score_samples(X), two.score_samples(X), atol=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(1, 5))
@settings(max_examples=25)
def test_density_matches_scipy(seed, k, d):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(k))
    mu = rng.normal(size=(k, d))
    var = rng.uniform(0.2, 3.0, size=(k, d))
    X = rng.normal(size=(7, d))
    g = DiagonalGaussianMixture.from_params(w, mu, var)
    ref = logsumexp([np.log(w[c]) + multivariate_normal(mu[c], np.diag(var[c])).logpdf(X)
                     for c in range(k)], axis=0)
    assert np.allclose(g.score_samples(X), ref, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_single_component_closed_form(seed):
    X = np.random.default_rng(seed).normal(2.0, 3.0, size=(40, 32))
    g = DiagonalGaussianMixture(n_components=1, random_state=seed).fit(X)
    assert g.weights_[0] == 1.0
    assert np.allclose(g.means_[0], X.mean(axis=0), atol=1e-10)
    assert np.allclose(g.variances_[0], X.var(axis=0), atol=1e-10)


def test_single_component_variance_floor():
    X = np.ones((5, 3))
    g = DiagonalGaussianMixture(n_components=1).fit(X)
    assert np.allclose(g.variances_, 1e-6)


def test_two_clusters():
    rng = np.random.default_rng(7)
    X = np.concatenate([rng.normal(-5, 1, 100), rng.normal(5, 1, 100)])[:, None]
    g = DiagonalGaussianMixture(n_components=2, random_state=0).fit(X)
    order = np.argsort(g.means_[:, 0])
    assert np.allclose(g.means_[order, 0], [-5, 5], atol=0.5)
    assert np.allclose(g.weights_, 0.5, atol=0.1)
    assert g.trace_.is_monotone()


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5))
@settings(max_examples=20, deadline=None)
def test_em_trace_nondecreasing(seed, k):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 4)) + rng.integers(0, 3, size=(60, 1)) * 3.0
    g = DiagonalGaussianMixture(n_components=k, random_state=seed).fit(X)
    assert g.trace_.is_monotone(1e-8)
    assert np.isclose(g.weights_.sum(), 1.0)
    assert (g.variances_ >= 1e-6).all()


def test_fit_deterministic():
    X = np.random.default_rng(1).normal(size=(80, 3))
    a = DiagonalGaussianMixture(n_components=3, random_state=5).fit(X)
    b = DiagonalGaussianMixture(n_components=3, random_state=5).fit(X)
    assert np.array_equal(a.means_, b.means_)
    assert a.trace_.log_likelihoods == b.trace_.log_likelihoods


def test_duplicated_points_survive():
    X = np.repeat(np.array([[0.0, 0.0], [1.0, 1.0]]), 10, axis=0)
    g = DiagonalGaussianMixture(n_components=4, random_state=0).fit(X)
    assert np.isfinite(g.score_samples(X)).all()
    assert np.isclose(g.weights_.sum(), 1.0)


def test_errors():
    with pytest.raises(TooFewSamples):
        DiagonalGaussianMixture(n_components=5).fit(np.zeros((3, 2)))
    g = DiagonalGaussianMixture(n_components=1).fit(np.random.default_rng(0).random((5, 2)))
    with pytest.raises(DimensionMismatch):
        g.score_samples(np.zeros((1, 3)))


def test_sampling():
    g = DiagonalGaussianMixture.from_params([1.0], [[0.0]], [[1.0]])
    X, _ = g.sample(100_000, random_state=0)
    assert abs(X.mean()) < 0.02

    tiny = DiagonalGaussianMixture.from_params([1.0], [[3.0, -2.0]], [[1e-6, 1e-6]])
    X, _ = tiny.sample(1000, random_state=1)
    assert np.abs(X - [3.0, -2.0]).max() <= 6 * np.sqrt(1e-6)

    lopsided = DiagonalGaussianMixture.from_params([1.0, 0.0], [[0.0], [100.0]], [[1.0], [1.0]])
    X, labels = lopsided.sample(500, random_state=2)
    assert (labels == 0).all() and X.max() < 50


def test_sampling_reproducible():
    g = DiagonalGaussianMixture.from_params([0.3, 0.7], [[0.0], [4.0]], [[1.0], [2.0]])
    a, _ = g.sample(50, random_state=9)
    b, _ = g.sample(50, random_state=np.random.default_rng(9))
    assert np.array_equal(a, b)
