import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from patchcrf.crf import (assemble_feature, backward, brute_force_logZ, brute_force_marginals,
                          chain_marginals, compute_unaries, forward, log_transition)
from patchcrf.exceptions import DimensionMismatch, InstanceTooLarge
from patchcrf.gmm import DiagonalGaussianMixture


def enumerate_chain(u, log_q):
    """Plain-Python sum over every label sequence; returns (logZ, marginals)."""
    n, m = len(u), len(u[0])
    weights = {}
    for y in itertools.product(range(m), repeat=n):
        s = sum(u[k][y[k]] for k in range(n))
        s += sum(log_q[y[k]][y[k + 1]] for k in range(n - 1))
        weights[y] = s
    top = max(weights.values())
    z = sum(math.exp(s - top) for s in weights.values())
    marg = np.zeros((n, m))
    for y, s in weights.items():
        for k in range(n):
            marg[k, y[k]] += math.exp(s - top) / z
    return top + math.log(z), marg


def instance(rng, n, m):
    u = rng.uniform(-10, 10, size=(n, m))
    Q = rng.dirichlet(np.ones(m), size=m)
    return u, log_transition(Q)


chains = st.tuples(st.integers(1, 6), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))


@given(chains)
@settings(max_examples=60)
def test_forward_backward_agree_with_enumeration(case):
    n, m, seed = case
    u, lq = instance(np.random.default_rng(seed), n, m)
    ref_z, ref_p = enumerate_chain(u.tolist(), lq.tolist())
    _, fz = forward(u, lq)
    _, bz = backward(u, lq)
    assert fz == pytest.approx(ref_z, abs=1e-9)
    assert bz == pytest.approx(ref_z, abs=1e-9)
    assert brute_force_logZ(u, lq) == pytest.approx(ref_z, abs=1e-9)
    p = chain_marginals(u, lq)
    assert np.allclose(p, ref_p, atol=1e-9)
    assert np.allclose(brute_force_marginals(u, lq), ref_p, atol=1e-9)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_single_label_chain():
    u = np.array([[1.5], [-2.0], [0.25]])
    for fn in (forward, backward):
        assert fn(u, np.zeros((1, 1)))[1] == pytest.approx(-0.25, abs=1e-12)
    assert brute_force_logZ(u, np.zeros((1, 1))) == pytest.approx(-0.25)
    assert np.array_equal(chain_marginals(u, np.zeros((1, 1))), np.ones((3, 1)))


def test_single_position():
    assert forward(np.zeros((1, 3)), np.zeros((3, 3)))[1] == pytest.approx(np.log(3))
    u = np.array([[0.1, 2.0, -1.0]])
    assert backward(u, np.zeros((3, 3)))[1] == pytest.approx(np.log(np.exp(u).sum()))


def test_uniform_pair():
    lq = np.log(np.full((2, 2), 0.5))
    assert brute_force_logZ(np.zeros((2, 2)), lq) == pytest.approx(np.log(2))
    assert forward(np.zeros((2, 2)), lq)[1] == pytest.approx(np.log(2))


def test_uniform_marginals():
    p = chain_marginals(np.zeros((5, 4)), np.log(np.full((4, 4), 0.25)))
    assert np.allclose(p, 0.25)


def test_table_shapes():
    u, lq = instance(np.random.default_rng(0), 5, 3)
    la, _ = forward(u, lq)
    lb, _ = backward(u, lq)
    assert la.shape == lb.shape == (4, 3)


def test_large_potentials_stay_finite():
    rng = np.random.default_rng(1)
    u = rng.uniform(-800, 800, size=(50, 3))
    lq = log_transition(np.array([[1 - 2e-300, 1e-300, 1e-300]] * 3))
    _, z = forward(u, lq)
    p = chain_marginals(u, lq)
    assert np.isfinite(z) and np.isfinite(p).all()
    assert np.allclose(p.sum(axis=1), 1.0)


def test_brute_force_guard():
    with pytest.raises(InstanceTooLarge):
        brute_force_logZ(np.zeros((11, 4)), np.zeros((4, 4)))


def test_shape_errors():
    with pytest.raises(DimensionMismatch):
        forward(np.zeros((3, 2)), np.zeros((3, 3)))


def test_assemble_feature():
    out = assemble_feature(np.array([[0.3, 0.7], [0.6, 0.4]]))
    assert np.allclose(out, [0.3, 0.6, 0.7, 0.4])
    assert np.array_equal(assemble_feature(np.ones((4, 1))), np.ones(4))


@given(chains)
@settings(max_examples=30)
def test_feature_sums_to_length(case):
    n, m, seed = case
    u, lq = instance(np.random.default_rng(seed), n, m)
    f = assemble_feature(chain_marginals(u, lq))
    assert f.shape == (n * m,)
    assert f.sum() == pytest.approx(n, abs=1e-9)


def test_unaries():
    g = DiagonalGaussianMixture.from_params([1.0], [[0.0]], [[1.0]])
    u = compute_unaries([g], np.array([[0.0], [1.0]]))
    assert u.shape == (2, 1)
    assert u[0, 0] == pytest.approx(-0.918939, abs=1e-6)
    u2 = compute_unaries([g, g], np.array([[0.5]]))
    assert u2[0, 0] == u2[0, 1]
