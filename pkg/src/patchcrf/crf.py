"""Linear-chain inference in the log domain.

A chain of ``n`` positions and ``m`` labels is described by unary
potentials ``u`` (``n x m``, the log-density of each patch under each
class mixture) and a log transition matrix ``log_q`` (``m x m``). The
score of a label sequence ``y`` is

    sum_k u[k, y_k] + sum_k log_q[y_k, y_{k+1}]

Table layout (0-based rows, both ``(n - 1) x m``):

* ``log_alpha[j, c]`` sums over prefixes ``y_0..y_j`` whose next label is
  ``c``; it includes unaries of positions ``0..j``.
* ``log_beta[j, c]`` sums over suffixes ``y_{j+1}..y_{n-1}`` whose previous
  label is ``c``; it includes unaries of positions ``j+1..n-1``.

The empty prefix/suffix at either end of the chain contributes 0.
"""

from __future__ import annotations

import itertools

import numba
import numpy as np
from scipy.special import logsumexp

from .exceptions import DimensionMismatch, InstanceTooLarge

BRUTE_FORCE_LIMIT = 1_000_000


@numba.njit(cache=True)
def _lse_row(values):
    mx = -np.inf
    for v in values:
        if v > mx:
            mx = v
    if mx == -np.inf:
        return -np.inf
    s = 0.0
    for v in values:
        s += np.exp(v - mx)
    return mx + np.log(s)


@numba.njit(cache=True)
def _forward_kernel(u, log_q):
    n, m = u.shape
    table = np.zeros((max(n - 1, 0), m))
    prev = np.zeros(m)
    terms = np.empty(m)
    for j in range(n - 1):
        for c in range(m):
            for a in range(m):
                terms[a] = u[j, a] + log_q[a, c] + prev[a]
            table[j, c] = _lse_row(terms)
        prev = table[j]
    for c in range(m):
        terms[c] = u[n - 1, c] + prev[c]
    return table, _lse_row(terms)


@numba.njit(cache=True)
def _backward_kernel(u, log_q):
    n, m = u.shape
    table = np.zeros((max(n - 1, 0), m))
    nxt = np.zeros(m)
    terms = np.empty(m)
    for j in range(n - 2, -1, -1):
        for c in range(m):
            for b in range(m):
                terms[b] = u[j + 1, b] + log_q[c, b] + nxt[b]
            table[j, c] = _lse_row(terms)
        nxt = table[j]
    for c in range(m):
        terms[c] = u[0, c] + nxt[c]
    return table, _lse_row(terms)


def _check_chain(u, log_q):
    u = np.ascontiguousarray(u, dtype=np.float64)
    log_q = np.ascontiguousarray(log_q, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] < 1 or u.shape[1] < 1:
        raise ValueError(f"unaries must be a non-empty n x m array, got shape {u.shape}")
    m = u.shape[1]
    if log_q.shape != (m, m):
        raise DimensionMismatch(f"log transition must be {m}x{m}, got {log_q.shape}")
    return u, log_q


def log_transition(Q) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(Q, dtype=np.float64))


def compute_unaries(gmms, features) -> np.ndarray:
    """``u[k, c]`` = log-density of patch feature ``k`` under class ``c``."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    return np.column_stack([g.score_samples(features) for g in gmms])


def forward(u, log_q):
    """Return ``(log_alpha, log_z)``."""
    u, log_q = _check_chain(u, log_q)
    return _forward_kernel(u, log_q)


def backward(u, log_q):
    """Return ``(log_beta, log_z)``."""
    u, log_q = _check_chain(u, log_q)
    return _backward_kernel(u, log_q)


def marginals(u, log_q, log_alpha, log_beta) -> np.ndarray:
    """Per-position label posteriors, ``n x m`` with rows summing to one."""
    u, log_q = _check_chain(u, log_q)
    n, m = u.shape
    scores = u.copy()
    scores[1:] += log_alpha[:n - 1]
    scores[:-1] += log_beta[:n - 1]
    scores -= scores.max(axis=1, keepdims=True)
    p = np.exp(scores)
    return p / p.sum(axis=1, keepdims=True)


def chain_marginals(u, log_q) -> np.ndarray:
    log_alpha, _ = forward(u, log_q)
    log_beta, _ = backward(u, log_q)
    return marginals(u, log_q, log_alpha, log_beta)


def assemble_feature(p) -> np.ndarray:
    """Class-major concatenation: all positions of class 0, then class 1, ..."""
    return np.asarray(p, dtype=np.float64).T.reshape(-1)


# enumeration oracles

def _all_paths(n, m):
    if m ** n > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"{m}^{n} label sequences exceeds {BRUTE_FORCE_LIMIT}")
    return np.array(list(itertools.product(range(m), repeat=n)), dtype=np.intp).reshape(-1, n)


def _path_scores(u, log_q, paths):
    n = u.shape[0]
    scores = u[np.arange(n), paths].sum(axis=1)
    if n > 1:
        scores = scores + log_q[paths[:, :-1], paths[:, 1:]].sum(axis=1)
    return scores


def brute_force_logZ(u, log_q) -> float:
    """log partition function by explicit enumeration of all ``m**n`` paths."""
    u, log_q = _check_chain(u, log_q)
    paths = _all_paths(*u.shape)
    return float(logsumexp(_path_scores(u, log_q, paths)))


def brute_force_marginals(u, log_q) -> np.ndarray:
    u, log_q = _check_chain(u, log_q)
    n, m = u.shape
    paths = _all_paths(n, m)
    scores = _path_scores(u, log_q, paths)
    log_z = logsumexp(scores)
    p = np.empty((n, m))
    for k in range(n):
        for c in range(m):
            p[k, c] = np.exp(logsumexp(scores[paths[:, k] == c]) - log_z)
    return p
