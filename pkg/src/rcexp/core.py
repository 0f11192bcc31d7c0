"""Simplex primitives, divergences and distortion bookkeeping.

Exponents and divergences are plain floats; ``math.inf`` is the only
infinite value ever produced and NaN is treated as a bug.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

# weights below this are exact zeros when forming supports
ZERO_PROB = 1e-15
SUM_TOL = 1e-12

INF = math.inf


class ProblemError(ValueError):
    """Invalid problem data (bad distribution, shape mismatch, ...)."""


class ScaleError(ValueError):
    """Instance exceeds the size an oracle or grid search can handle."""


class NotRationalError(ScaleError):
    """Distortion entries have no exact rational form."""


def as_distribution(p, name: str = "distribution") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ProblemError(f"{name}: expected a nonempty 1-D vector")
    if not np.all(np.isfinite(p)):
        raise ProblemError(f"{name}: non-finite weight")
    if np.any(p < 0):
        raise ProblemError(f"{name}: negative weight")
    if abs(p.sum() - 1.0) > SUM_TOL:
        raise ProblemError(f"{name}: weights sum to {p.sum():.15g}, not 1")
    return p


def as_conditional(w, name: str = "conditional") -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 2:
        raise ProblemError(f"{name}: expected a matrix")
    for i, row in enumerate(w):
        as_distribution(row, f"{name} row {i}")
    return w


def support(p) -> np.ndarray:
    return np.asarray(p) > ZERO_PROB


def positive_part(x: float) -> float:
    """|x|^+ with |inf|^+ = inf."""
    if math.isnan(x):
        raise FloatingPointError("NaN in |.|^+")
    return x if x > 0 else 0.0


def kl_divergence(t, p) -> float:
    """D(t||p) in nats; inf when t charges a point outside supp(p)."""
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    if t.shape != p.shape:
        raise ProblemError(f"dimension mismatch: {t.shape} vs {p.shape}")
    st = support(t)
    if np.any(st & ~support(p)):
        return INF
    val = float(np.sum(t[st] * (np.log(t[st]) - np.log(p[st]))))
    return max(val, 0.0)


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[support(p)]
    return float(-np.sum(p * np.log(p)))


def parse_rational(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v.strip())
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    f = Fraction(float(v)).limit_denominator(10**6)
    if float(f) != float(v):
        raise NotRationalError(f"distortion value {v!r} has no small rational form")
    return f


@dataclass(frozen=True)
class DistortionSpec:
    """|X| x |Xhat| additive distortion, optionally with exact rationals."""

    values: np.ndarray
    rational_values: Optional[tuple] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ProblemError("distortion must be a matrix")
        if not np.all(np.isfinite(vals)):
            raise ProblemError("distortion entries must be finite")
        object.__setattr__(self, "values", vals)
        if self.rational_values is not None:
            rat = tuple(tuple(Fraction(r) for r in row) for row in self.rational_values)
            if len(rat) != vals.shape[0] or any(len(r) != vals.shape[1] for r in rat):
                raise ProblemError("rational distortion shape mismatch")
            for i, row in enumerate(rat):
                for j, r in enumerate(row):
                    if float(r) != vals[i, j]:
                        raise ProblemError(f"rational entry ({i},{j}) = {r} != {vals[i, j]!r}")
            object.__setattr__(self, "rational_values", rat)

    @classmethod
    def from_rationals(cls, rows: Sequence[Sequence]) -> "DistortionSpec":
        rat = tuple(tuple(parse_rational(v) for v in row) for row in rows)
        vals = np.array([[float(r) for r in row] for row in rat])
        return cls(vals, rat)

    @classmethod
    def hamming(cls, k: int, m: Optional[int] = None) -> "DistortionSpec":
        m = k if m is None else m
        return cls.from_rationals([[0 if i == j else 1 for j in range(m)] for i in range(k)])

    @property
    def shape(self):
        return self.values.shape

    def exact(self) -> tuple:
        """Rational entries, deriving them from the floats when needed."""
        if self.rational_values is not None:
            return self.rational_values
        return tuple(tuple(parse_rational(v) for v in row) for row in self.values)


def as_distortion(d) -> np.ndarray:
    if isinstance(d, DistortionSpec):
        return d.values
    return np.asarray(d, dtype=float)


@dataclass(frozen=True)
class SourceProblem:
    """Source law P, codebook law Q, distortion d and threshold D."""

    P: np.ndarray
    Q: np.ndarray
    d: DistortionSpec
    D: float
    D_exact: Optional[Fraction] = field(default=None, compare=False)

    def __post_init__(self):
        P = as_distribution(self.P, "P")
        Q = as_distribution(self.Q, "Q")
        d = self.d if isinstance(self.d, DistortionSpec) else DistortionSpec(self.d)
        if d.shape != (P.size, Q.size):
            raise ProblemError(f"distortion shape {d.shape} != ({P.size}, {Q.size})")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "D", float(self.D))

    def with_threshold(self, D) -> "SourceProblem":
        exact = D if isinstance(D, Fraction) else None
        return SourceProblem(self.P, self.Q, self.d, float(D), exact)

    def reduced(self):
        """(P, Q, d) restricted to supp(P) x supp(Q)."""
        sp, sq = support(self.P), support(self.Q)
        return self.P[sp], self.Q[sq], self.d.values[np.ix_(sp, sq)]

    @property
    def d_max(self) -> float:
        _, _, d = self.reduced()
        return float(d.max())

    @property
    def row_min_max(self) -> float:
        """max_x min_xhat d(x, xhat) over the supports."""
        _, _, d = self.reduced()
        return float(d.min(axis=1).max())


def avg_distortion(t, w, d) -> float:
    """d(T o W) = sum_x T(x) sum_xhat W(xhat|x) d(x, xhat)."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    d = as_distortion(d)
    if w.shape != d.shape or t.shape[0] != d.shape[0]:
        raise ProblemError(f"dimension mismatch: T {t.shape}, W {w.shape}, d {d.shape}")
    return float(np.sum(t[:, None] * w * d))


def min_achievable_distortion(t, q, d) -> float:
    """sum_x T(x) min_{xhat in supp Q} d(x, xhat)."""
    t = np.asarray(t, dtype=float)
    d = as_distortion(d)
    sq = support(q)
    if t.shape[0] != d.shape[0] or np.asarray(q).shape[0] != d.shape[1]:
        raise ProblemError("dimension mismatch")
    st = support(t)
    return float(np.sum(t[st] * d[np.ix_(st, sq)].min(axis=1)))


def logsumexp(a, axis=None):
    """Max-shifted log-sum-exp; rows of all -inf give -inf."""
    a = np.asarray(a, dtype=float)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)
