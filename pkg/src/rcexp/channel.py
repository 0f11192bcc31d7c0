"""Channel exponents through the source/channel substitution.

A channel problem (Q, P(y|x), D) compiles into a source problem whose source
alphabet is X x Y with law Q(x)P(y|x), whose reproduction law is Q, and
whose distortion is the log-likelihood ratio ln P(y|x)/P(y|xhat).  Decoding
error then corresponds to encoding success and correct decoding to encoding
failure.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from .core import (INF, ProblemError, ScaleError, SourceProblem, as_conditional, as_distribution,
                   entropy, support)
from .e0 import E0Kernel
from .optimize import brent_max, golden_max, lattice_minimize
from . import source
from .source import Optimum, _sup_rho_unit
from .rate import rate_many

RHO_CAP = 2.0**20
ML_RHO_MAX = 1.0 - 1e-6


class ExceptionalPointWarning(UserWarning):
    """Input sits on a point where the exact exponent is only a bound."""


@dataclass(frozen=True)
class ChannelProblem:
    Q: np.ndarray
    channel: np.ndarray
    D: float = 0.0

    def __post_init__(self):
        Q = as_distribution(self.Q, "Q")
        W = as_conditional(self.channel, "channel")
        if W.shape[0] != Q.size:
            raise ProblemError(f"channel has {W.shape[0]} input rows, Q has {Q.size} entries")
        if np.any(W <= 0):
            raise ProblemError("channel entries must be strictly positive")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "channel", W)
        object.__setattr__(self, "D", float(self.D))

    def with_threshold(self, D) -> "ChannelProblem":
        return ChannelProblem(self.Q, self.channel, D)

    def with_input(self, Q) -> "ChannelProblem":
        return ChannelProblem(Q, self.channel, self.D)

    @property
    def joint(self) -> np.ndarray:
        """Q(x) P(y|x) as an |X| x |Y| matrix."""
        return self.Q[:, None] * self.channel


@dataclass(frozen=True)
class CompiledDual:
    composite: SourceProblem
    n_inputs: int
    n_outputs: int

    def cell(self, x, y) -> int:
        return x * self.n_outputs + y


def compile_channel(cp: ChannelProblem) -> CompiledDual:
    """Source problem on X x Y with LLR distortion and reproduction law Q."""
    nx, ny = cp.channel.shape
    logw = np.log(cp.channel)
    # d[(x, y), xhat] = ln P(y|x) - ln P(y|xhat)
    d = (logw[:, :, None] - logw.T[None, :, :]).reshape(nx * ny, nx)
    P = cp.joint.ravel()
    P = P / P.sum()
    return CompiledDual(SourceProblem(P, cp.Q, d, cp.D), nx, ny)


def dmin_q(cp: ChannelProblem) -> float:
    """min over y and over x, xhat in supp Q of ln P(y|x)/P(y|xhat)."""
    sq = support(cp.Q)
    logw = np.log(cp.channel[sq])
    return float((logw[:, None, :] - logw[None, :, :]).min())


def mutual_information(cp: ChannelProblem) -> float:
    J = cp.joint
    py = J.sum(axis=0)
    return max(0.0, entropy(py) + entropy(cp.Q) - entropy(J.ravel()))


def ee(cp: ChannelProblem, R: float) -> float:
    """Decoding error exponent of the simplified erasure/list decoder (explicit)."""
    return source.es_explicit(compile_channel(cp).composite, R)


def ee_implicit(cp: ChannelProblem, R: float, grid_resolution=1e-3) -> float:
    return source.es_implicit(compile_channel(cp).composite, R, grid_resolution, max_symbols=9)


def gallager_e0(rho: float, cp: ChannelProblem) -> float:
    """-ln sum_y [sum_x Q(x) P(y|x)^(1/(1+rho))]^(1+rho)."""
    sq = support(cp.Q)
    logq = np.log(cp.Q[sq])
    logw = np.log(cp.channel[sq])
    a = logq[:, None] + logw / (1.0 + rho)
    top = a.max(axis=0)
    inner = np.log(np.exp(a - top).sum(axis=0)) + top
    b = (1.0 + rho) * inner
    top = b.max()
    return float(-(np.log(np.exp(b - top).sum()) + top))


def gallager_er(cp: ChannelProblem, R: float) -> float:
    """Gallager's random-coding exponent max_{0<=rho<=1} {E0(rho) - rho R}."""
    rhos = np.linspace(0.0, 1.0, 21)
    vals = np.array([gallager_e0(r, cp) - r * R for r in rhos])
    i = int(np.argmax(vals))
    _, v = golden_max(lambda r: gallager_e0(r, cp) - r * R, rhos[max(i - 1, 0)], rhos[min(i + 1, 20)])
    return max(0.0, v, float(vals[i]))


def ec_star_implicit(cp: ChannelProblem, R: float, grid_resolution=1e-2) -> float:
    """Strict correct-decoding exponent, min_{T: R(T,Q,D) >= R} D(T || Q o P)."""
    return source.ef_implicit(compile_channel(cp).composite, R, grid_resolution, max_symbols=9)


def ec_star_lce(cp: ChannelProblem, R: float) -> float:
    return source.ef_explicit_lce(compile_channel(cp).composite, R)


# -- maximum-likelihood correct decoding ---------------------------------------------

def _ml_kernel(cp):
    return E0Kernel(compile_channel(cp.with_threshold(0.0)).composite)


def ml_correct_exponent(cp: ChannelProblem, R: float) -> float:
    """sup_{0<=rho<1} {E0(1/(1-rho), -rho, Q, 0) + rho R}, rho truncated at 1 - 1e-6."""
    if R < 0:
        raise ValueError("rate must be nonnegative")
    kernel = _ml_kernel(cp)

    def f(rho):
        return kernel(1.0 / (1.0 - rho), -rho) + rho * R

    rhos = np.concatenate([np.linspace(0.0, 0.99, 100), 1.0 - np.logspace(-2.5, -6, 15)])
    vals = np.array([f(r) for r in rhos])
    i = int(np.argmax(vals))
    lo, hi = rhos[max(i - 1, 0)], rhos[min(i + 1, len(rhos) - 1)]
    best = float(vals[i])
    if hi > lo:
        _, v = brent_max(f, lo, hi, xtol=1e-12)
        best = max(best, v)
    return max(best, 0.0)


def _cells(cp):
    sq = support(cp.Q)
    J = cp.joint[sq]
    return sq, J


def _check_cells(n, limit=9):
    if n > limit:
        raise ScaleError(f"implicit channel formula limited to |X||Y| <= {limit}, got {n}")


def _kl_rows(Ts, p):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(Ts > 0, Ts * (np.log(Ts) - np.log(p)), 0.0)
    return np.maximum(terms.sum(axis=1), 0.0)


def ml_correct_implicit(cp: ChannelProblem, R: float, grid_resolution=1e-2) -> float:
    """min_T {D(T || Q o P) + |R - R(T, Q, 0)|^+} over joint types T(x, y)."""
    comp = compile_channel(cp.with_threshold(0.0)).composite
    p, q, d = comp.reduced()
    _check_cells(p.size)

    def objective(Ts):
        return _kl_rows(Ts, p) + np.maximum(R - rate_many(Ts, q, d, 0.0), 0.0)

    _, v = lattice_minimize(objective, [p.size], grid_resolution, seeds=6, window=1200)
    return float(v)


def _mutual_info_rows(J, nx, ny):
    J = J.reshape(-1, nx, ny)
    u = J.sum(axis=2, keepdims=True)
    v = J.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(J > 0, J * (np.log(J) - np.log(u) - np.log(v)), 0.0)
    return np.maximum(t.sum(axis=(1, 2)), 0.0), u[:, :, 0]


def ml_correct_implicit_uw(cp: ChannelProblem, R: float, grid_resolution=1e-2) -> float:
    """min_{U, W} {D(U o W || Q o P) + |R - D(U||Q) - I(U o W)|^+}."""
    sq, J0 = _cells(cp)
    nx, ny = J0.shape
    _check_cells(nx * ny)
    p = J0.ravel()
    q = cp.Q[sq]

    def objective(Js):
        info, u = _mutual_info_rows(Js, nx, ny)
        return _kl_rows(Js, p) + np.maximum(R - _kl_rows(u, q) - info, 0.0)

    _, v = lattice_minimize(objective, [nx * ny], grid_resolution, seeds=6, window=1200)
    return float(v)


def dueck_korner_bound(cp: ChannelProblem, R: float, grid_resolution=1e-2) -> float:
    """min_W {D(Q o W || Q o P) + |R - I(Q o W)|^+} over test channels W(y|x)."""
    sq, J0 = _cells(cp)
    nx, ny = J0.shape
    _check_cells(nx * ny)
    q = cp.Q[sq]
    p = J0.ravel()

    def objective(Ws):
        J = (Ws.reshape(-1, nx, ny) * q[None, :, None]).reshape(len(Ws), -1)
        info, _ = _mutual_info_rows(J, nx, ny)
        return _kl_rows(J, p) + np.maximum(R - info, 0.0)

    _, v = lattice_minimize(objective, [ny] * nx, grid_resolution, seeds=6, window=1200)
    return float(v)


# -- Forney's erasure/list exponents -------------------------------------------------

def _sup_s_unit(kernel: E0Kernel, rho, grid=33):
    """sup_{0<=s<=1} E0(s, rho) for rho >= 0 (concave in s)."""
    if rho == 0:
        return 0.0, 0.0
    ss = np.linspace(0.0, 1.0, grid)
    vals = kernel(ss, rho)
    i = int(np.argmax(vals))
    lo, hi = ss[max(i - 1, 0)], ss[min(i + 1, grid - 1)]
    s, v = brent_max(lambda x: kernel(x, rho), lo, hi, xtol=1e-12)
    for x in (lo, hi):
        fx = kernel(x, rho)
        if fx > v:
            s, v = x, fx
    if vals[i] > v:
        return float(vals[i]), float(ss[i])
    return v, s


def forney_bound_opt(cp: ChannelProblem, R: float) -> Optimum:
    kernel = E0Kernel(compile_channel(cp).composite)

    def objective(rho):
        v, s = _sup_s_unit(kernel, rho)
        return v - rho * R, s

    rho, v, s = _sup_rho_unit(objective)
    return Optimum(max(v, 0.0), rho, s)


def forney_bound(cp: ChannelProblem, R: float) -> float:
    """Forney's random-coding lower bound: sup over 0<=rho<=1, 0<=s<=1."""
    if R < 0:
        raise ValueError("rate must be nonnegative")
    return forney_bound_opt(cp, R).value


def forney_ee(cp: ChannelProblem, R: float) -> float:
    """sup_{rho>=0} sup_{0<=s<=1} {E0(s, rho, Q, D) - rho R}; +inf when unbounded in rho."""
    if R < 0:
        raise ValueError("rate must be nonnegative")
    kernel = E0Kernel(compile_channel(cp).composite)

    def F(rho):
        return _sup_s_unit(kernel, rho)[0] - rho * R

    tail = np.array([F(2.0**k) for k in range(10, 21)])
    if np.all(np.diff(tail) > 1e-6):
        return INF
    # concave in rho: walk out by doubling until the objective stops increasing
    hi, f_hi = 1.0, F(1.0)
    while hi < RHO_CAP:
        f_next = F(2 * hi)
        if f_next <= f_hi:
            break
        hi, f_hi = 2 * hi, f_next
    _, v = golden_max(F, 0.0, min(2 * hi, RHO_CAP), xtol=1e-10 * max(1.0, hi))
    return max(v, f_hi, 0.0)


def _exceptional(cp: ChannelProblem, R: float):
    tol = 1e-9
    if abs(R + cp.D) <= tol:
        return f"R = -D = {R:g}"
    if cp.D < 0 and abs(cp.D - dmin_q(cp)) <= tol:
        return f"D = D_min(Q) = {cp.D:g} < 0"
    return None


def forney_exact(cp: ChannelProblem, R: float) -> float:
    """Exact exponent of Forney's optimum tradeoff decoder at fixed Q:
    min{E^e(Q,R,D), E_e(Q,R,D)}."""
    why = _exceptional(cp, R)
    if why is not None:
        warnings.warn(f"exceptional point ({why}); the value is only a bound", ExceptionalPointWarning,
                      stacklevel=2)
    return min(forney_ee(cp, R), ee(cp, R))


# -- optimization over the input distribution ----------------------------------------

@dataclass
class QSearchResult:
    q: np.ndarray
    value: float
    restarts: int
    history: List[float] = field(default_factory=list)

    def __iter__(self):
        # unpacks as (q, value)
        return iter((self.q, self.value))


def maximize_over_q(objective: Callable, channel, R: float, D: float = 0.0, restarts: int = 8,
                    seed: int = 0) -> QSearchResult:
    """Best-effort multistart search for sup_Q objective(ChannelProblem(Q, channel, D), R).

    The value is a lower bound on the supremum; ``history`` is the
    best-so-far value after each restart (starting from uniform Q).
    """
    from scipy.optimize import minimize

    channel = np.asarray(channel, dtype=float)
    nx = channel.shape[0]
    if nx > 4:
        raise ScaleError(f"input optimization limited to |X| <= 4, got {nx}")

    def q_of(z):
        z = np.concatenate([[0.0], z])
        e = np.exp(z - z.max())
        q = e / e.sum()
        q[q < 1e-15] = 0.0
        return q / q.sum()

    def value(z):
        return objective(ChannelProblem(q_of(z), channel, D), R)

    def loss(z):
        v = value(z)
        return -v if math.isfinite(v) else -1e300

    rng = np.random.default_rng(seed)
    best_q = np.full(nx, 1.0 / nx)
    best_v = value(np.zeros(nx - 1))
    history = [best_v]
    for k in range(restarts):
        if k == 0:
            z0 = np.zeros(nx - 1)
        else:
            lq = np.log(rng.dirichlet(np.ones(nx)))
            z0 = lq[1:] - lq[0]
        res = minimize(loss, z0, method="Nelder-Mead", options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": 400})
        v = value(res.x)
        if v > best_v:
            best_v, best_q = v, q_of(res.x)
        history.append(best_v)
    return QSearchResult(best_q, best_v, restarts, history)
