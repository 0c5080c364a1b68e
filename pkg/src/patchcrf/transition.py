"""Class-to-class transition preferences from Monte-Carlo KL divergence.

``Q[a, b]`` is a softmax over ``-KL(gmm_a || gmm_b)``: the closer two class
patch distributions are, the more likely one label follows the other
along the scan path.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .exceptions import DimensionMismatch

DEFAULT_KL_SAMPLES = 100_000
# smallest normal double; keeps every entry strictly positive and log(Q) finite
Q_FLOOR = np.finfo(np.float64).tiny


def mc_kl_divergence(ga, gb, n_samples=DEFAULT_KL_SAMPLES, random_state=None) -> float:
    """Estimate KL(ga || gb) by averaging the log-ratio over samples from ``ga``.

    Negative estimates (Monte-Carlo noise) are clamped to zero.
    """
    if ga.n_features != gb.n_features:
        raise DimensionMismatch(
            f"cannot compare mixtures of dimension {ga.n_features} and {gb.n_features}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    X, _ = ga.sample(int(n_samples), random_state=random_state)
    estimate = float(np.mean(ga.score_samples(X) - gb.score_samples(X)))
    return max(estimate, 0.0)


def pair_seed(seed: int, a: int, b: int) -> np.random.SeedSequence:
    """Deterministic sub-seed for the ``(a, b)`` divergence."""
    return np.random.SeedSequence([int(seed), int(a), int(b)])


def kl_matrix(gmms, n_samples=DEFAULT_KL_SAMPLES, random_state=0, n_jobs=1) -> np.ndarray:
    """Pairwise ``D[a, b] = KL(gmm_a || gmm_b)`` with a zero diagonal."""
    m = len(gmms)
    if m < 1:
        raise ValueError("need at least one class mixture")
    dims = {g.n_features for g in gmms}
    if len(dims) > 1:
        raise DimensionMismatch(f"class mixtures have differing dimensions {sorted(dims)}")
    seed = 0 if random_state is None else int(random_state)
    pairs = [(a, b) for a in range(m) for b in range(m) if a != b]

    def one(pair):
        a, b = pair
        rng = np.random.default_rng(pair_seed(seed, a, b))
        return mc_kl_divergence(gmms[a], gmms[b], n_samples, rng)

    if n_jobs and n_jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            values = list(pool.map(one, pairs))
    else:
        values = [one(p) for p in pairs]
    D = np.zeros((m, m))
    for (a, b), v in zip(pairs, values):
        D[a, b] = v
    return D


def transition_from_divergences(D, include_self=True) -> np.ndarray:
    """Softmax of ``-D`` along rows.

    With ``include_self=False`` the normaliser skips the diagonal term, the
    literal reading of a normaliser over "other classes"; rows then no longer
    sum to one.
    """
    D = np.asarray(D, dtype=np.float64)
    m = D.shape[0]
    logits = -D
    if include_self:
        norm_logits = logits
    else:
        if m < 2:
            raise ValueError("include_self=False needs at least two classes")
        norm_logits = np.where(np.eye(m, dtype=bool), -np.inf, logits)
    shift = norm_logits.max(axis=1, keepdims=True)
    numer = np.exp(logits - shift)
    Q = numer / np.exp(norm_logits - shift).sum(axis=1, keepdims=True)
    return np.maximum(Q, Q_FLOOR)


def build_transition_matrix(gmms, n_samples=DEFAULT_KL_SAMPLES, random_state=0,
                            include_self=True, n_jobs=1) -> np.ndarray:
    """``m x m`` transition matrix from the class mixtures."""
    D = kl_matrix(gmms, n_samples=n_samples, random_state=random_state, n_jobs=n_jobs)
    return transition_from_divergences(D, include_self=include_self)
