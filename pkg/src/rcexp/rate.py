"""The rate function R(T, Q, D) and its maximum over T.

R(T, Q, D) = min_W D(T o W || T x Q) subject to d(T o W) <= D is evaluated
through its concave dual in the slope s >= 0,

    sup_s { -s D - sum_x T(x) ln sum_xhat Q(xhat) exp(-s d(x, xhat)) },

whose maximizer is found by safeguarded Newton steps on the (monotone)
derivative.  Everything is vectorized over a stack of T's so that grid
searches over the simplex stay cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import INF, ProblemError, ScaleError, as_distortion, kl_divergence, support
from .optimize import lattice_minimize

S_MAX = 2.0**40


@dataclass(frozen=True)
class RateResult:
    rate: float
    s_star: Optional[float] = None
    w_star: Optional[np.ndarray] = None
    boundary: bool = False


def _prepare(Q, d):
    Q = np.asarray(Q, dtype=float)
    d = as_distortion(d)
    if d.shape[1] != Q.shape[0]:
        raise ProblemError(f"distortion has {d.shape[1]} columns, Q has {Q.shape[0]} entries")
    sq = support(Q)
    dq = d[:, sq]
    logq = np.log(Q[sq])
    m = dq.min(axis=1)
    return sq, dq, logq, m


def _tilted(s, ds, logq):
    """Row log-partition, mean and variance of the shifted distortion under W_s."""
    a = logq[None, None, :] - s[:, None, None] * ds[None, :, :]
    top = a.max(axis=2, keepdims=True)
    e = np.exp(a - top)
    z = e.sum(axis=2, keepdims=True)
    w = e / z
    lz = (np.log(z) + top)[..., 0]
    mu = np.einsum("nxk,xk->nx", w, ds)
    var = np.einsum("nxk,nxk->nx", w, (ds[None] - mu[..., None]) ** 2)
    return lz, mu, var


def _solve_dual(T, ds, logq, Dp):
    """Maximize -s Dp - sum T lz(s) per row of T, for rows with a root in (0, S_MAX)."""
    n = len(T)

    def deriv(s, idx):
        lz, mu, var = _tilted(s, ds, logq)
        return -Dp[idx] + np.einsum("nx,nx->n", T[idx], mu), -np.einsum("nx,nx->n", T[idx], var)

    idx = np.arange(n)
    g_top, _ = deriv(np.full(n, S_MAX), idx)
    stuck = g_top >= 0
    # binary search for the power-of-two bracket
    kl = np.full(n, -61)
    kh = np.full(n, 40)
    for _ in range(7):
        km = (kl + kh) // 2
        g, _ = deriv(2.0 ** km.astype(float), idx)
        neg = g < 0
        kh = np.where(neg, km, kh)
        kl = np.where(neg, kl, km)
    lo = np.where(kl <= -61, 0.0, 2.0 ** kl.astype(float))
    hi = 2.0 ** kh.astype(float)
    s = 0.5 * (lo + hi)
    active = ~stuck
    for _ in range(100):
        ia = np.nonzero(active)[0]
        if ia.size == 0:
            break
        g1, g2 = deriv(s[ia], ia)
        done = (np.abs(g1) <= 1e-15 * (1.0 + np.abs(Dp[ia]))) | (hi[ia] - lo[ia] <= 4e-16 * hi[ia])
        pos = g1 > 0
        lo[ia] = np.where(pos, s[ia], lo[ia])
        hi[ia] = np.where(pos, hi[ia], s[ia])
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = s[ia] - g1 / g2
        bad = ~np.isfinite(newton) | (newton <= lo[ia]) | (newton >= hi[ia])
        s[ia] = np.where(done, s[ia], np.where(bad, 0.5 * (lo[ia] + hi[ia]), newton))
        active[ia[done]] = False
    s = np.where(stuck, S_MAX, s)
    lz, _, _ = _tilted(s, ds, logq)
    value = -s * Dp - np.einsum("nx,nx->n", T, lz)
    return s, np.maximum(value, 0.0), stuck


def rate_many(Ts, Q, d, D, return_slopes=False):
    """R(T, Q, D) for every row T of ``Ts`` (shape (N, |X|)).

    Returns an array of rates (inf where the constraint set is empty), and
    optionally the dual slopes s* (nan where undefined, inf at the boundary).
    """
    Ts = np.atleast_2d(np.asarray(Ts, dtype=float))
    sq, dq, logq, m = _prepare(Q, d)
    if Ts.shape[1] != dq.shape[0]:
        raise ProblemError(f"T has {Ts.shape[1]} entries, distortion has {dq.shape[0]} rows")
    D = float(D)
    ds = dq - m[:, None]
    scale = max(1.0, float(np.abs(dq).max()), abs(D))
    tol = 1e-12 * scale

    Tpos = np.where(Ts > 0, Ts, 0.0)
    dmin = Tpos @ m
    Dp = D - dmin
    dbar = Tpos @ (ds @ np.exp(logq))  # product coupling, shifted units
    rates = np.zeros(len(Ts))
    slopes = np.full(len(Ts), np.nan)

    infeasible = Dp < -tol
    boundary = ~infeasible & (Dp <= tol)
    product = ~infeasible & ~boundary & (dbar <= Dp)
    regular = ~(infeasible | boundary | product)

    rates[infeasible] = INF
    slopes[product] = 0.0
    if boundary.any():
        argmin_mass = np.array([np.exp(logq[row <= tol]).sum() for row in ds])
        rates[boundary] = -(Tpos[boundary] @ np.log(argmin_mass))
        slopes[boundary] = INF
    if regular.any():
        s, val, stuck = _solve_dual(Tpos[regular], ds, logq, Dp[regular])
        if stuck.any():
            # derivative still positive at S_MAX: treat as the boundary limit
            argmin_mass = np.array([np.exp(logq[row <= tol]).sum() for row in ds])
            lim = -(Tpos[regular][stuck] @ np.log(argmin_mass))
            val[stuck] = lim
            s[stuck] = INF
        rates[regular] = val
        slopes[regular] = s
    if return_slopes:
        return rates, slopes
    return rates


def rate(T, Q, d, D) -> RateResult:
    """R(T, Q, D) with the dual slope and the tilted achiever W_s."""
    T = np.asarray(T, dtype=float)
    Q = np.asarray(Q, dtype=float)
    dfull = as_distortion(d)
    if dfull.shape != (T.shape[0], Q.shape[0]):
        raise ProblemError(f"dimension mismatch: T {T.shape}, Q {Q.shape}, d {dfull.shape}")
    r, s = rate_many(T[None, :], Q, dfull, D, return_slopes=True)
    r, s = float(r[0]), float(s[0])
    if math.isinf(r):
        return RateResult(INF)
    sq, dq, logq, m = _prepare(Q, dfull)
    W = np.zeros_like(dfull)
    if math.isinf(s):
        tol = 1e-12 * max(1.0, float(np.abs(dq).max()))
        mask = (dq - m[:, None]) <= tol
        sub = np.where(mask, np.exp(logq)[None, :], 0.0)
        W[:, sq] = sub / sub.sum(axis=1, keepdims=True)
        return RateResult(r, s, W, boundary=True)
    a = logq[None, :] - s * (dq - m[:, None])
    a -= a.max(axis=1, keepdims=True)
    w = np.exp(a)
    W[:, sq] = w / w.sum(axis=1, keepdims=True)
    return RateResult(r, s, W)


def coupling_divergence(T, W, Q) -> float:
    """D(T o W || T x Q)."""
    T = np.asarray(T, dtype=float)
    return kl_divergence((T[:, None] * W).ravel(), (T[:, None] * np.asarray(Q)[None, :]).ravel())


def rate_primal_bruteforce(T, Q, d, D, grid_resolution=1e-3) -> float:
    """Primal oracle: lattice search over feasible W, refined to ``grid_resolution``."""
    T = np.asarray(T, dtype=float)
    Q = np.asarray(Q, dtype=float)
    dfull = as_distortion(d)
    st, sq = support(T), support(Q)
    t, q, dd = T[st], Q[sq], dfull[np.ix_(st, sq)]
    nx, nk = dd.shape
    if nx * nk > 9:
        raise ScaleError(f"primal oracle limited to |X||Xhat| <= 9, got {nx}x{nk}")
    logq = np.log(q)
    D = float(D)
    slack = 1e-12 * max(1.0, float(np.abs(dd).max()))

    def objective(Wflat):
        W = Wflat.reshape(-1, nx, nk)
        dist = np.einsum("x,nxk,xk->n", t, W, dd)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(W > 0, W * (np.log(W) - logq), 0.0)
        val = np.einsum("x,nxk->n", t, terms)
        return np.where(dist <= D + slack, np.maximum(val, 0.0), np.inf)

    x0, v = lattice_minimize(objective, [nk] * nx, grid_resolution, budget=50_000, seeds=2, polish=1.0)
    if not math.isfinite(v):
        return INF
    return min(float(v), _slsqp_polish(x0, t, logq, dd, D))


def _slsqp_polish(x0, t, logq, dd, D):
    from scipy.optimize import minimize

    nx, nk = dd.shape
    q = np.exp(logq)

    def fun(w):
        W = np.clip(w.reshape(nx, nk), 1e-300, None)
        return float(np.sum(t[:, None] * W * (np.log(W) - logq)))

    def jac(w):
        W = np.clip(w.reshape(nx, nk), 1e-300, None)
        return (t[:, None] * (np.log(W) - logq + 1.0)).ravel()

    cons = [{"type": "ineq", "fun": lambda w: D - float(np.sum(t[:, None] * w.reshape(nx, nk) * dd)),
             "jac": lambda w: -(t[:, None] * dd).ravel()}]
    for i in range(nx):
        sel = np.zeros(nx * nk)
        sel[i * nk:(i + 1) * nk] = 1.0
        cons.append({"type": "eq", "fun": lambda w, sel=sel: float(sel @ w) - 1.0, "jac": lambda w, sel=sel: sel})
    start = np.clip(0.999 * x0 + 0.001 * np.tile(q, nx), 0.0, 1.0)
    res = minimize(fun, start, jac=jac, method="SLSQP", bounds=[(0.0, 1.0)] * (nx * nk), constraints=cons,
                   options={"ftol": 1e-14, "maxiter": 500})
    W = np.clip(res.x.reshape(nx, nk), 0.0, None)
    W /= W.sum(axis=1, keepdims=True)
    if float(np.sum(t[:, None] * W * dd)) > D + 1e-9:
        return INF
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sum(t[:, None] * np.where(W > 0, W * (np.log(W) - logq), 0.0))
    return float(max(val, 0.0))


def rate_max(Q, d, D) -> float:
    """max_T R(T, Q, D).

    R is a supremum of affine functions of T, hence convex, so the maximum
    over the simplex is attained at a vertex T = delta_x.
    """
    dfull = as_distortion(d)
    return float(np.max(rate_many(np.eye(dfull.shape[0]), Q, dfull, D)))
