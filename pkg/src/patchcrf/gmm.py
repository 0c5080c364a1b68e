"""Diagonal-covariance Gaussian mixtures fitted by EM.

Initialisation is seeded k-means (k-means++ seeding, a fixed number of
Lloyd iterations); every M-step floors variances. All derived quantities
used for scoring are recomputed from ``weights_``, ``means_`` and
``variances_`` so that a model rebuilt from its parameters scores
bit-identically to the one that was fitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DimensionMismatch, TooFewSamples

VAR_FLOOR = 1e-6
EMPTY_MASS = 1e-8
LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class EmTrace:
    """Average log-likelihood per EM iteration.

    Entry 0 is the k-means initialisation; entry ``i`` the parameters after
    the ``i``-th M-step. ``rescues`` lists iterations whose M-step re-seeded
    an empty component (monotonicity is not guaranteed across those).
    """

    log_likelihoods: List[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False
    rescues: List[int] = field(default_factory=list)

    def is_monotone(self, slack: float = 1e-8) -> bool:
        ll = np.asarray(self.log_likelihoods)
        steps = np.diff(ll)
        ok = steps >= -slack
        for it in self.rescues:
            if 0 < it <= len(steps):
                ok[it - 1] = True
        return bool(ok.all())


def _kmeans(X, k, rng, n_iter):
    """k-means++ seeding followed by ``n_iter`` Lloyd steps; returns labels."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        centers[c] = X[idx]
        closest = np.minimum(closest, ((X - centers[c]) ** 2).sum(axis=1))

    labels = np.zeros(n, dtype=int)
    for _ in range(n_iter):
        d2 = ((X[:, None, :] - centers[None]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
    d2 = ((X[:, None, :] - centers[None]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def _component_log_prob(X, means, variances):
    """``(n_samples, n_components)`` log N(x; mean_i, diag(var_i))."""
    log_det = np.log(variances).sum(axis=1)
    out = np.empty((X.shape[0], means.shape[0]))
    for c in range(means.shape[0]):
        maha = ((X - means[c]) ** 2) @ (1.0 / variances[c])
        out[:, c] = -0.5 * (X.shape[1] * LOG_2PI + log_det[c] + maha)
    return out


class DiagonalGaussianMixture(DensityMixin, BaseEstimator):
    """Gaussian mixture with diagonal covariances.

    Parameters
    ----------
    n_components : int
        Number of mixture components.
    max_iter : int
        Maximum number of EM iterations.
    tol : float
        Stop when the relative improvement of the average log-likelihood
        drops below this value.
    var_floor : float
        Lower bound applied to every variance after each M-step.
    kmeans_iter : int
        Lloyd iterations used for initialisation.
    random_state : int or None
        Seed for the k-means++ seeding.
    """

    def __init__(self, n_components=1, max_iter=200, tol=1e-6, var_floor=VAR_FLOOR,
                 kmeans_iter=10, random_state=None):
        self.n_components = n_components
        self.max_iter = max_iter
        self.tol = tol
        self.var_floor = var_floor
        self.kmeans_iter = kmeans_iter
        self.random_state = random_state

    def _m_step(self, X, resp, trace, iteration, point_ll=None):
        nk = resp.sum(axis=0)
        empty = nk < EMPTY_MASS
        if empty.any():
            # re-seed starved components at the worst-explained points
            if point_ll is None:
                point_ll = np.zeros(X.shape[0])
            worst = np.argsort(point_ll, kind="stable")
            resp = resp.copy()
            for rank, c in enumerate(np.flatnonzero(empty)):
                resp[worst[rank]] = 0.0
                resp[worst[rank], c] = 1.0
            nk = resp.sum(axis=0)
            trace.rescues.append(iteration)
        means = (resp.T @ X) / nk[:, None]
        variances = np.empty_like(means)
        for c in range(means.shape[0]):
            variances[c] = (resp[:, c] @ ((X - means[c]) ** 2)) / nk[c]
        weights = nk / X.shape[0]
        self.weights_ = weights / weights.sum()
        self.means_ = means
        self.variances_ = np.maximum(variances, self.var_floor)

    def _estimate_weighted_log_prob(self, X):
        return _component_log_prob(X, self.means_, self.variances_) + np.log(self.weights_)

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        k = int(self.n_components)
        if k < 1:
            raise ValueError("n_components must be >= 1")
        if X.shape[0] < k:
            raise TooFewSamples(f"{X.shape[0]} samples cannot support {k} components")
        rng = np.random.default_rng(self.random_state)
        self.n_features_in_ = X.shape[1]

        trace = EmTrace()
        labels = _kmeans(X, k, rng, self.kmeans_iter) if k > 1 else np.zeros(X.shape[0], int)
        resp = np.zeros((X.shape[0], k))
        resp[np.arange(X.shape[0]), labels] = 1.0
        self._m_step(X, resp, trace, 0)

        prev = None
        for it in range(self.max_iter + 1):
            weighted = self._estimate_weighted_log_prob(X)
            log_norm = logsumexp(weighted, axis=1)
            ll = float(log_norm.mean())
            trace.log_likelihoods.append(ll)
            if prev is not None and (ll - prev) <= self.tol * max(abs(prev), 1e-300):
                trace.converged = True
                break
            if it == self.max_iter:
                break
            prev = ll
            resp = np.exp(weighted - log_norm[:, None])
            self._m_step(X, resp, trace, it + 1, log_norm)
            trace.n_iter = it + 1
        self.trace_ = trace
        self.converged_ = trace.converged
        self.n_iter_ = trace.n_iter
        return self

    @classmethod
    def from_params(cls, weights, means, variances, **kwargs):
        obj = cls(n_components=len(weights), **kwargs)
        obj.weights_ = np.asarray(weights, dtype=np.float64)
        obj.means_ = np.atleast_2d(np.asarray(means, dtype=np.float64))
        obj.variances_ = np.atleast_2d(np.asarray(variances, dtype=np.float64))
        obj.n_features_in_ = obj.means_.shape[1]
        if obj.weights_.shape != (obj.means_.shape[0],) or obj.means_.shape != obj.variances_.shape:
            raise DimensionMismatch("weights, means and variances disagree in shape")
        return obj

    @property
    def n_features(self) -> int:
        return self.means_.shape[1]

    def _check_X(self, X):
        check_is_fitted(self, "means_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.means_.shape[1]:
            raise DimensionMismatch(
                f"mixture has dimension {self.means_.shape[1]}, got {X.shape[1]}")
        return X

    def score_samples(self, X):
        """Natural-log density of each row of ``X``."""
        X = self._check_X(X)
        with np.errstate(divide="ignore"):
            return logsumexp(self._estimate_weighted_log_prob(X), axis=1)

    def log_density(self, x) -> float:
        return float(self.score_samples(np.atleast_2d(x))[0])

    def sample(self, n_samples=1, random_state=None):
        """Draw ``n_samples`` points; returns ``(X, component_labels)``."""
        check_is_fitted(self, "means_")
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        rng = random_state if isinstance(random_state, np.random.Generator) \
            else np.random.default_rng(random_state)
        labels = rng.choice(len(self.weights_), size=n_samples, p=self.weights_)
        noise = rng.standard_normal((n_samples, self.means_.shape[1]))
        X = self.means_[labels] + np.sqrt(self.variances_[labels]) * noise
        return X, labels
