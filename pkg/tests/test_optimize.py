import math

import numpy as np
import pytest

from rcexp.optimize import (compositions, golden_max, lattice_minimize, lattice_size, maximize_halfline,
                            product_lattice, simplex_lattice)


def test_golden_interior_and_boundary():
    x, v = golden_max(lambda t: -(t - 0.3) ** 2, 0, 1)
    assert x == pytest.approx(0.3, abs=1e-6) and v == pytest.approx(0.0, abs=1e-12)
    x, v = golden_max(lambda t: t, 0, 1)
    assert x == 1.0 and v == 1.0


def test_halfline_finds_far_maximum():
    x, v, edge = maximize_halfline(lambda s: -(math.log(s + 1e-300) - math.log(3000.0)) ** 2)
    assert x == pytest.approx(3000.0, rel=1e-6) and not edge
    _, _, edge = maximize_halfline(lambda s: s)
    assert edge


def test_compositions():
    c = compositions(4, 3)
    assert len(c) == math.comb(6, 2) and np.all(c.sum(axis=1) == 4) and len({tuple(r) for r in c}) == len(c)
    assert compositions(0, 3).tolist() == [[0, 0, 0]]
    assert compositions(5, 1).tolist() == [[5]]


def test_lattices():
    g = simplex_lattice(3, 10)
    assert np.allclose(g.sum(axis=1), 1)
    pl = product_lattice([2, 3], 4)
    assert len(pl) == lattice_size([2, 3], 4) == 5 * 15
    assert np.allclose(pl[:, :2].sum(axis=1), 1) and np.allclose(pl[:, 2:].sum(axis=1), 1)


def test_lattice_minimize_off_grid_optimum():
    target = np.array([0.123456, 0.654321, 0.222223])

    def f(X):
        return ((X - target) ** 2).sum(axis=1)

    x, v = lattice_minimize(f, [3], 1e-2)
    assert np.allclose(x, target, atol=1e-4) and v < 1e-8


def test_lattice_minimize_all_infinite():
    x, v = lattice_minimize(lambda X: np.full(len(X), np.inf), [2], 0.1)
    assert v == np.inf
