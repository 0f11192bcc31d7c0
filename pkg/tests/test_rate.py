import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rcexp.core import DistortionSpec, ScaleError, avg_distortion
from rcexp.rate import coupling_divergence, rate, rate_many, rate_max, rate_primal_bruteforce
from rcexp.optimize import simplex_lattice

from conftest import binary_entropy

HAM = DistortionSpec.hamming(2)
BINARY_RD = math.log(2) - binary_entropy(0.25)  # 0.130812...


def test_d_zero_forces_identity():
    for t in ([0.5, 0.5], [0.9, 0.1], [1.0, 0.0]):
        assert rate(t, [0.5, 0.5], HAM, 0.0).rate == pytest.approx(math.log(2), abs=1e-12)


def test_inactive_constraint_gives_zero(rng):
    d = rng.random((3, 3))
    assert rate(rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3)), d, d.max()).rate == 0.0


def test_binary_closed_form():
    res = rate([0.5, 0.5], [0.5, 0.5], HAM, 0.25)
    assert res.rate == pytest.approx(BINARY_RD, abs=1e-12)
    assert rate_primal_bruteforce([0.5, 0.5], [0.5, 0.5], HAM, 0.25) == pytest.approx(BINARY_RD, abs=1e-3)


def test_infeasible_is_inf():
    assert rate([0.5, 0.5], [0.5, 0.5], np.array([[1.0, 2.0], [1.0, 2.0]]), 0.5).rate == math.inf


def test_achiever_invariants(rng):
    for _ in range(30):
        d = rng.uniform(-1, 1, (3, 2))
        t, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(2))
        lo = float(t @ d.min(axis=1))
        D = lo + rng.random() * (float(t @ d @ q) - lo)
        res = rate(t, q, d, D)
        assert avg_distortion(t, res.w_star, d) <= D + 1e-9
        assert coupling_divergence(t, res.w_star, q) == pytest.approx(res.rate, abs=1e-6)


def test_primal_oracle_agrees_with_dual(rng):
    worst = 0.0
    for _ in range(100):
        nx, nk = rng.integers(2, 4, size=2)
        d = rng.random((nx, nk))
        t, q = rng.dirichlet(np.ones(nx)), rng.dirichlet(np.ones(nk))
        lo = float(t @ d.min(axis=1))
        D = lo + rng.random() * (float(t @ d @ q) - lo)
        worst = max(worst, abs(rate(t, q, d, D).rate - rate_primal_bruteforce(t, q, d, D)))
    assert worst <= 1e-3


def test_primal_oracle_scale_limit():
    with pytest.raises(ScaleError):
        rate_primal_bruteforce(np.ones(4) / 4, np.ones(3) / 3, np.zeros((4, 3)), 0.0)


def test_boundary_threshold_limit():
    # D equal to the minimum achievable distortion: only argmin couplings are feasible
    d = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.5]])
    q = np.array([0.2, 0.3, 0.5])
    res = rate([0.4, 0.6], q, d, 0.0)
    assert res.boundary
    assert res.rate == pytest.approx(-(0.4 * math.log(0.5) + 0.6 * math.log(0.3)), abs=1e-12)
    assert rate_primal_bruteforce([0.4, 0.6], q, d, 0.0) == pytest.approx(res.rate, abs=1e-6)


def test_rate_max_examples(rng):
    assert rate_max([0.5, 0.5], HAM, 0.0) == pytest.approx(math.log(2), abs=1e-12)
    assert rate_max([0.5, 0.5], HAM, 1.0) == 0.0
    d = rng.random((3, 3))
    q = rng.dirichlet(np.ones(3))
    D = 0.5 * float(d.min(axis=1).max() + d.max())
    grid = simplex_lattice(3, 100)
    assert rate_max(q, d, D) == pytest.approx(rate_many(grid, q, d, D).max(), abs=1e-3)


def test_rate_max_infinite_when_a_row_misses():
    d = np.array([[0.0, 1.0], [0.6, 0.8]])
    assert rate_max([0.5, 0.5], d, 0.5) == math.inf


probs = st.floats(0.05, 0.95)


@given(probs, probs, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_nonincreasing_in_threshold(t, q, a, b):
    d = np.array([[0.0, 1.0], [0.7, 0.2]])
    lo, hi = sorted((a, b))
    assert rate([t, 1 - t], [q, 1 - q], d, hi).rate <= rate([t, 1 - t], [q, 1 - q], d, lo).rate + 1e-12


@given(probs, probs, probs, st.floats(0.1, 0.9))
def test_convex_in_source_type(t1, t2, q, lam):
    # R is a supremum of affine functions of T
    d = np.array([[0.0, 1.0, 0.4], [0.8, 0.1, 0.5]])
    qq = np.array([q, (1 - q) / 2, (1 - q) / 2])
    D = 0.3
    ta, tb = np.array([t1, 1 - t1]), np.array([t2, 1 - t2])
    mix = rate_many(np.array([ta, tb, lam * ta + (1 - lam) * tb]), qq, d, D)
    assert mix[2] <= lam * mix[0] + (1 - lam) * mix[1] + 1e-10
