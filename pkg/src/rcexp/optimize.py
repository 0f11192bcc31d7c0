"""One-dimensional searches and barycentric lattices on (products of) simplices."""
from __future__ import annotations

import itertools
import math

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI2 = (3 - math.sqrt(5)) / 2


def golden_max(f, a, b, xtol=1e-11, maxiter=200):
    """Golden-section maximization of a unimodal f on [a, b].

    The endpoints are evaluated too, so a maximum sitting on the boundary is
    returned exactly.  Returns (x, f(x)).
    """
    a, b = float(min(a, b)), float(max(a, b))
    fa, fb = f(a), f(b)
    best = (a, fa) if fa >= fb else (b, fb)
    h = b - a
    if h <= xtol:
        return best
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if h <= xtol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + INV_PHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INV_PHI * h
            fd = f(d)
    for x, fx in ((c, fc), (d, fd)):
        if fx > best[1]:
            best = (x, fx)
    return best


def halfline_grid(upper):
    k_hi = int(round(2 * math.log2(upper)))
    return np.concatenate([[0.0], 2.0 ** (np.arange(-40, k_hi + 1) / 2.0)])


def brent_max(f, a, b, xtol):
    """Bounded Brent maximization (golden section with parabolic steps)."""
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda x: -f(x), bounds=(a, b), method="bounded",
                          options={"xatol": xtol, "maxiter": 200})
    x = float(res.x)
    return x, -float(res.fun)


def maximize_halfline(f, upper=2.0**20, f_vec=None):
    """Maximize f on [0, upper]: sqrt(2)-spaced log grid, then bracketed refinement.

    Returns (x, f(x), hit_upper) where hit_upper says the grid maximum was the
    last grid point (the supremum may lie beyond ``upper``).
    """
    pts = halfline_grid(upper)
    if f_vec is not None:
        vals = np.asarray(f_vec(pts), dtype=float)
    else:
        vals = np.array([f(p) for p in pts])
    vals = np.where(np.isnan(vals), -np.inf, vals)
    i = int(np.argmax(vals))
    last = len(pts) - 1
    if not np.isfinite(vals[i]):
        return pts[i], vals[i], i == last
    lo = pts[i - 1] if i > 0 else 0.0
    hi = pts[i + 1] if i < last else pts[i]
    x, fx = pts[i], vals[i]
    if hi > lo:
        xb, fb = brent_max(f, lo, hi, xtol=max(1e-14, 1e-9 * pts[i]))
        if fb > fx:
            x, fx = xb, fb
    return x, fx, i == last


def minimize_halfline(f, upper=2.0**20, f_vec=None):
    g_vec = None if f_vec is None else (lambda s: -np.asarray(f_vec(s)))
    x, v, edge = maximize_halfline(lambda s: -f(s), upper, g_vec)
    return x, -v, edge


def compositions(n: int, k: int) -> np.ndarray:
    """All k-tuples of nonnegative integers summing to n, lexicographic order."""
    if k == 1:
        return np.array([[n]], dtype=np.int64)
    combos = np.array(list(itertools.combinations(range(n + k - 1), k - 1)), dtype=np.int64)
    if combos.size == 0:
        combos = combos.reshape(0, k - 1)
    bars = np.hstack([np.full((len(combos), 1), -1), combos, np.full((len(combos), 1), n + k - 1)])
    return np.diff(bars, axis=1) - 1


def simplex_lattice(k: int, steps: int) -> np.ndarray:
    """Barycentric lattice with spacing 1/steps on the simplex in R^k."""
    return compositions(steps, k) / steps


def lattice_size(blocks, steps) -> int:
    return math.prod(math.comb(steps + b - 1, b - 1) for b in blocks)


def product_lattice(blocks, steps) -> np.ndarray:
    """Cartesian product of simplex lattices, one per block (concatenated)."""
    parts = [simplex_lattice(b, steps) for b in blocks]
    idx = np.meshgrid(*[np.arange(len(p)) for p in parts], indexing="ij")
    return np.hstack([p[i.ravel()] for p, i in zip(parts, idx)])


def _tangent_basis(blocks):
    # per block, directions e_j - e_last; the returned rows span the tangent space
    dim = sum(blocks)
    rows = []
    off = 0
    for b in blocks:
        for j in range(b - 1):
            v = np.zeros(dim)
            v[off + j] = 1.0
            v[off + b - 1] = -1.0
            rows.append(v)
        off += b
    return np.array(rows).reshape(-1, dim)


def _window(blocks, max_points):
    basis = _tangent_basis(blocks)
    k = basis.shape[0]
    if k == 0:
        return np.zeros((1, sum(blocks)))
    half = min(10, max(1, int((max_points ** (1.0 / k) - 1) // 2)))
    z = np.array(list(itertools.product(range(-half, half + 1), repeat=k)), dtype=float)
    return (z @ basis) / half


def zoom_search(f, x0, f0, blocks, h, hmin, max_points=4000, maxiter=2000):
    """Local lattice-window refinement on a product of simplices.

    A window of (2K+1)^k lattice points with half-width h is centered on the
    incumbent; the incumbent moves to the best window point, and the window
    halves whenever the center is already best.  f maps (N, dim) -> (N,).
    """
    win = _window(blocks, max_points)
    x, fx = np.asarray(x0, dtype=float), float(f0)
    for _ in range(maxiter):
        if h < hmin:
            break
        cand = x + h * win
        cand[np.abs(cand) < 1e-14] = 0.0
        cand = cand[np.all(cand >= 0.0, axis=1)]
        vals = np.asarray(f(cand), dtype=float)
        j = int(np.argmin(vals))
        if vals[j] < fx - 1e-15 * max(1.0, abs(fx)):
            x, fx = cand[j], float(vals[j])
        else:
            h /= 2
    return x, fx


def lattice_minimize(f, blocks, resolution, budget=200_000, seeds=4, polish=1e-3, window=4000):
    """Global lattice search followed by local window refinement.

    The global lattice uses spacing ``resolution`` unless that exceeds
    ``budget`` points, in which case it is coarsened.  The ``seeds`` best
    lattice points are then refined by :func:`zoom_search` down to
    ``resolution * polish``.
    Returns (x, f(x)); f(x) is inf when no finite lattice value was seen.
    """
    steps = max(1, int(round(1.0 / resolution)))
    while steps > 1 and lattice_size(blocks, steps) > budget:
        steps = max(1, int(steps / 1.25))
    X = product_lattice(blocks, steps)
    vals = np.asarray(f(X), dtype=float)
    order = np.argsort(vals, kind="stable")
    best_x, best_v = X[order[0]], float(vals[order[0]])
    if not math.isfinite(best_v):
        return best_x, best_v
    for idx in order[:seeds]:
        if not math.isfinite(vals[idx]):
            break
        x, v = zoom_search(f, X[idx], vals[idx], blocks, 2.0 / steps, resolution * polish, window)
        if v < best_v:
            best_x, best_v = x, v
    return best_x, best_v
