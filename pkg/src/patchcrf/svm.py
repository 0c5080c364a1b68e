"""RBF-kernel soft-margin SVMs trained with SMO, combined one-vs-all.

The binary solver works on the dual

    min_a  0.5 * a' Q a - sum(a)   s.t.  0 <= a_i <= C,  sum(y_i a_i) = 0

with ``Q_ij = y_i y_j K(x_i, x_j)``. Each step updates the maximal
violating pair (the pair with the largest gap in ``-y_i grad_i``, which
is the pair with the largest error difference) and stops once that gap
is below ``tol``.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DimensionMismatch, NoConvergence, SingleClassData

TAU = 1e-12


def rbf_kernel(X, Y, gamma):
    """``exp(-gamma * ||x - y||^2)``; scalar for two vectors, else a Gram matrix."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    scalar = X.ndim == 1 and Y.ndim == 1
    X2, Y2 = np.atleast_2d(X), np.atleast_2d(Y)
    if X2.shape[1] != Y2.shape[1]:
        raise DimensionMismatch(f"kernel inputs have dimensions {X2.shape[1]} and {Y2.shape[1]}")
    d2 = (X2 ** 2).sum(1)[:, None] + (Y2 ** 2).sum(1)[None, :] - 2.0 * X2 @ Y2.T
    K = np.exp(-gamma * np.maximum(d2, 0.0))
    return float(K[0, 0]) if scalar else K


def _resolve_gamma(gamma, n_features):
    if gamma is None or gamma == "auto":
        return 1.0 / n_features
    return float(gamma)


def smo(K, y, C, tol=1e-3, max_iter=10_000, random_state=0):
    """Solve the SVM dual for a precomputed Gram matrix.

    Returns ``(alpha, bias, n_iter, converged)``.
    """
    n = len(y)
    rng = np.random.default_rng(random_state)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # Q @ alpha - 1
    converged = False
    it = 0
    diag = np.diag(K)
    while it < max_iter:
        score = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        if score[i] - score[j] < tol:
            converged = True
            break
        changed = _update_pair(i, j, K, diag, y, alpha, grad, C)
        if not changed:
            # stalled on the greedy pair: try a random partner
            candidates = np.flatnonzero(low & (np.arange(n) != i))
            if len(candidates) == 0 or not _update_pair(
                    i, int(rng.choice(candidates)), K, diag, y, alpha, grad, C):
                break
        it += 1
    bias = _bias(y, alpha, grad, C)
    return alpha, bias, it, converged


def _update_pair(i, j, K, diag, y, alpha, grad, C):
    """Analytic two-variable step on ``(i, j)``; updates in place."""
    yi, yj = y[i], y[j]
    eta = diag[i] + diag[j] - 2.0 * K[i, j]
    if eta <= 0:
        eta = TAU
    # move along y_i d_i = -y_j d_j; delta is the change in y_i * alpha_i
    delta = (-yi * grad[i] + yj * grad[j]) / eta
    # box limits in terms of delta
    lo_i, hi_i = (0.0 - alpha[i], C - alpha[i]) if yi > 0 else (alpha[i] - C, alpha[i] - 0.0)
    lo_j, hi_j = (alpha[j] - C, alpha[j] - 0.0) if yj > 0 else (0.0 - alpha[j], C - alpha[j])
    delta = min(max(delta, lo_i, lo_j), hi_i, hi_j)
    if abs(delta) < 1e-15:
        return False
    new_i = alpha[i] + yi * delta
    new_j = alpha[j] - yj * delta
    new_i = min(max(new_i, 0.0), C)
    new_j = min(max(new_j, 0.0), C)
    di, dj = new_i - alpha[i], new_j - alpha[j]
    alpha[i], alpha[j] = new_i, new_j
    grad += y * (K[:, i] * (yi * di) + K[:, j] * (yj * dj))
    return True


def _bias(y, alpha, grad, C):
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yg[free].mean()
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        ub = yg[low].min() if low.any() else np.inf
        lb = yg[up].max() if up.any() else -np.inf
        finite = [v for v in (ub, lb) if np.isfinite(v)]
        rho = 0.5 * (ub + lb) if len(finite) == 2 else (finite[0] if finite else 0.0)
    return -float(rho)


class BinaryRbfSVM(ClassifierMixin, BaseEstimator):
    """Soft-margin RBF SVM for labels in ``{-1, +1}``.

    ``gamma=None`` means ``1 / n_features``.
    """

    def __init__(self, C=10.0, gamma=None, tol=1e-3, max_iter=10_000, random_state=0):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).ravel()
        if len(y) != X.shape[0]:
            raise DimensionMismatch(f"{X.shape[0]} samples but {len(y)} labels")
        if not np.isin(y, (-1.0, 1.0)).all():
            raise ValueError("binary labels must be -1 or +1")
        if X.shape[0] < 2 or len(np.unique(y)) < 2:
            raise SingleClassData("binary SVM needs samples of both classes")
        gamma = _resolve_gamma(self.gamma, X.shape[1])
        K = rbf_kernel(X, X, gamma)
        alpha, bias, n_iter, converged = smo(K, y, float(self.C), self.tol,
                                             self.max_iter, self.random_state)
        if not converged:
            warnings.warn(f"SMO stopped after {n_iter} iterations without reaching "
                          f"tol={self.tol}", NoConvergence)
        sv = alpha > 0
        self.alpha_ = alpha
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = X[sv]
        self.dual_coef_ = alpha[sv] * y[sv]
        self.intercept_ = bias
        self.gamma_ = gamma
        self.n_iter_ = n_iter
        self.converged_ = converged
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([-1, 1])
        return self

    @classmethod
    def from_params(cls, support_vectors, dual_coef, intercept, gamma, C, converged=True):
        obj = cls(C=C, gamma=gamma)
        obj.support_vectors_ = np.asarray(support_vectors, dtype=np.float64)
        obj.dual_coef_ = np.asarray(dual_coef, dtype=np.float64)
        obj.intercept_ = float(intercept)
        obj.gamma_ = float(gamma)
        obj.converged_ = bool(converged)
        obj.n_features_in_ = obj.support_vectors_.shape[1]
        obj.classes_ = np.array([-1, 1])
        return obj

    def decision_function(self, X):
        check_is_fitted(self, "intercept_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(
                f"model expects {self.n_features_in_} features, got {X.shape[1]}")
        if len(self.dual_coef_) == 0:
            return np.full(X.shape[0], self.intercept_)
        return rbf_kernel(X, self.support_vectors_, self.gamma_) @ self.dual_coef_ + self.intercept_

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, 1, -1)


class OneVsAllRbfSVM(ClassifierMixin, BaseEstimator):
    """One binary machine per class; prediction is the argmax of decisions.

    Ties go to the lowest class index.
    """

    def __init__(self, C=10.0, gamma=None, tol=1e-3, max_iter=10_000, random_state=0):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y, classes=None):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_ = np.unique(y) if classes is None else np.asarray(classes)
        if len(self.classes_) < 2:
            raise SingleClassData("one-vs-all needs at least two classes")
        gamma = _resolve_gamma(self.gamma, X.shape[1])
        seeds = np.random.SeedSequence(
            0 if self.random_state is None else int(self.random_state)).spawn(len(self.classes_))
        machines = []
        for cls, seed in zip(self.classes_, seeds):
            target = np.where(y == cls, 1.0, -1.0)
            if (target > 0).all() or (target < 0).all():
                raise SingleClassData(f"class {cls!r} has no positive or no negative samples")
            machine = BinaryRbfSVM(C=self.C, gamma=gamma, tol=self.tol,
                                   max_iter=self.max_iter,
                                   random_state=int(seed.generate_state(1)[0]))
            machines.append(machine.fit(X, target))
        self.machines_ = machines
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "machines_")
        return np.column_stack([mach.decision_function(X) for mach in self.machines_])

    def predict_index(self, X):
        return np.argmax(self.decision_function(X), axis=1)

    def predict(self, X):
        return self.classes_[self.predict_index(X)]
