"""Encoding success and failure exponents for i.i.d. codebooks.

Implicit forms are minimizations over the source type T on the simplex;
explicit forms are one- or two-parameter optimizations of E0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import INF, ScaleError, SourceProblem
from .e0 import E0Kernel
from .optimize import golden_max, lattice_minimize, maximize_halfline, minimize_halfline
from .rate import rate_many, rate_max

S_CAP = 2.0**20
RHO_CAP = 2.0**20


@dataclass(frozen=True)
class ExponentCurve:
    rates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.shape != v.shape or r.ndim != 1:
            raise ValueError("rates and values must be 1-D of equal length")
        if np.any(np.diff(r) <= 0):
            raise ValueError("rates must be strictly ascending")
        if np.any(np.isnan(v)):
            raise ValueError("NaN exponent value")
        object.__setattr__(self, "rates", r)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class Optimum:
    """Value of a two-parameter sup with the (rho, s) where it was found."""

    value: float
    rho: float
    s: float


def _kl_rows(Ts, p):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(Ts > 0, Ts * (np.log(Ts) - np.log(p)), 0.0)
    return np.maximum(terms.sum(axis=1), 0.0)


def _tol(problem):
    return 1e-12 * max(1.0, abs(problem.D), float(np.abs(problem.d.values).max()))


def _sup_s(kernel: E0Kernel, rho, upper=S_CAP):
    """sup_{s >= 0} E0(s, rho) for rho >= 0, +inf when unbounded."""
    if rho == 0:
        return 0.0, 0.0
    if kernel.row_min.min() > kernel.D + 1e-12 * max(1.0, abs(kernel.D)):
        # every row keeps positive excess distortion: E0 grows linearly in s
        return INF, INF
    s, v, _ = maximize_halfline(lambda x: kernel(x, rho), upper, f_vec=lambda x: kernel(x, rho))
    return v, s


def _sup_rho_unit(objective, grid=21):
    """Maximize a concave objective of rho on [0, 1]; returns (rho, value, aux)."""
    rhos = np.linspace(0.0, 1.0, grid)
    vals = [objective(r) for r in rhos]
    vv = np.array([v[0] for v in vals])
    if np.any(np.isposinf(vv[1:])):
        j = 1 + int(np.argmax(np.isposinf(vv[1:])))
        return rhos[j], INF, vals[j][1]
    i = int(np.argmax(vv))
    lo, hi = rhos[max(i - 1, 0)], rhos[min(i + 1, grid - 1)]
    r, v = golden_max(lambda x: objective(x)[0], lo, hi, xtol=1e-10)
    if vv[i] >= v:
        return rhos[i], vv[i], vals[i][1]
    return r, v, objective(r)[1]


def es_explicit_opt(problem: SourceProblem, R: float) -> Optimum:
    kernel = E0Kernel(problem)

    def objective(rho):
        v, s = _sup_s(kernel, rho)
        return v - rho * R, s

    rho, v, s = _sup_rho_unit(objective)
    return Optimum(max(v, 0.0), rho, s)


def es_explicit(problem: SourceProblem, R: float) -> float:
    """sup_{0<=rho<=1} sup_{s>=0} {E0(s, rho, Q, D) - rho R}."""
    if R < 0:
        raise ValueError("rate must be nonnegative")
    return es_explicit_opt(problem, R).value


def _check_scale(problem, max_symbols):
    k = int(np.count_nonzero(problem.P > 1e-15))
    if k > max_symbols:
        raise ScaleError(f"implicit formula limited to |X| <= {max_symbols}, got {k}")


def es_implicit(problem: SourceProblem, R: float, grid_resolution=1e-3, max_symbols=4) -> float:
    """min_T {D(T||P) + |R(T, Q, D) - R|^+} by lattice search with local refinement."""
    _check_scale(problem, max_symbols)
    p, q, d = problem.reduced()

    def objective(Ts):
        r = rate_many(Ts, q, d, problem.D)
        return _kl_rows(Ts, p) + np.maximum(r - R, 0.0)

    # the objective is convex in T, so a single refined seed suffices
    _, v = lattice_minimize(objective, [p.size], grid_resolution, budget=20_000, seeds=1, window=1200)
    return float(v)


def ef_implicit_opt(problem: SourceProblem, R: float, grid_resolution=1e-3, max_symbols=4):
    """(value, minimizing T on supp P or None) for the failure exponent."""
    _check_scale(problem, max_symbols)
    p, q, d = problem.reduced()
    tol = _tol(problem)
    r_p = float(rate_many(p[None, :], q, d, problem.D)[0])
    if R <= r_p + tol:
        return 0.0, p
    if R > rate_max(q, d, problem.D) + tol:
        return INF, None

    def objective(Ts):
        r = rate_many(Ts, q, d, problem.D)
        return np.where(r >= R, _kl_rows(Ts, p), np.inf)

    T, v = lattice_minimize(objective, [p.size], grid_resolution, seeds=6, window=1200)
    return float(v), T


def ef_implicit(problem: SourceProblem, R: float, grid_resolution=1e-3, max_symbols=4) -> float:
    """min_{T: R(T, Q, D) >= R} D(T||P); +inf above R_max."""
    return ef_implicit_opt(problem, R, grid_resolution, max_symbols)[0]


def _inf_s_negrho(kernel: E0Kernel, rho):
    """inf_{s >= 0} E0(s, -rho)."""
    if rho == 0:
        return 0.0, 0.0
    s, v, _ = minimize_halfline(lambda x: kernel(x, -rho), S_CAP, f_vec=lambda x: kernel(x, -rho))
    return v, s


def ef_explicit_opt(problem: SourceProblem, R: float) -> Optimum:
    tol = _tol(problem)
    if problem.D < problem.row_min_max - tol:
        # some row has min distortion above D: inf over s is -inf for rho > 0
        return Optimum(0.0, 0.0, 0.0)
    p, q, d = problem.reduced()
    if R > rate_max(q, d, problem.D) + tol:
        # slope of the objective in rho tends to R - R_max > 0
        return Optimum(INF, INF, math.nan)
    kernel = E0Kernel(problem)

    def G(rho):
        return _inf_s_negrho(kernel, rho)[0] + rho * R

    rho, v, _ = maximize_halfline(G, RHO_CAP)
    return Optimum(max(v, 0.0), rho, _inf_s_negrho(kernel, rho)[1])


def ef_explicit_lce(problem: SourceProblem, R: float) -> float:
    """sup_{rho>=0} inf_{s>=0} {E0(s, -rho, Q, D) + rho R}."""
    if R < 0:
        raise ValueError("rate must be nonnegative")
    return ef_explicit_opt(problem, R).value


def lower_convex_envelope(curve: ExponentCurve) -> ExponentCurve:
    """Greatest convex minorant of a sampled curve, evaluated on its own grid.

    A trailing run of +inf values is kept as +inf (a vertical wall).
    """
    r, v = curve.rates, curve.values
    finite = np.isfinite(v)
    if finite.sum() < 2:
        raise ValueError("need at least two finite points")
    last = int(np.nonzero(finite)[0][-1])
    if not finite[: last + 1].all():
        raise ValueError("infinite values allowed only as a trailing run")
    if np.isneginf(v).any():
        raise ValueError("-inf value")
    hull = []
    for i in range(last + 1):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or above the chord a -> i
            if (v[b] - v[a]) * (r[i] - r[a]) >= (v[i] - v[a]) * (r[b] - r[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    out = np.full_like(v, INF)
    out[: last + 1] = np.interp(r[: last + 1], r[hull], v[hull])
    return ExponentCurve(r, np.minimum(out, v))


def sample_curve(fn, problem, rates, **kw) -> ExponentCurve:
    rates = np.asarray(rates, dtype=float)
    return ExponentCurve(rates, np.array([fn(problem, float(R), **kw) for R in rates]))
