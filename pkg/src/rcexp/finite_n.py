"""Exact finite-blocklength probabilities and Monte Carlo simulation.

Source probabilities are sums over type classes of the source block; the
probability that a single random codeword covers a block depends only on
its type and is obtained from integer-scaled distortion sums (rational
distortions times a common denominator) by convolution.  Channel error
probabilities sum over joint types of (x, y); channel LLRs are irrational,
so the covering probability of a competitor is computed from the exact
distribution of sum_i ln P(y_i | xhat_i), which depends on y only through
its composition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import ProblemError, ScaleError, SourceProblem, logsumexp, parse_rational, support
from .optimize import compositions

RNG_ALGORITHM = "philox"
TIE_TOL = 1e-9
MAX_SCALED_RANGE = 10**6
MAX_SOURCE_WORK = 5 * 10**7


@dataclass(frozen=True)
class TypeClass:
    composition: tuple
    n: int

    def __post_init__(self):
        comp = tuple(int(c) for c in self.composition)
        if any(c < 0 for c in comp):
            raise ProblemError("type counts must be nonnegative")
        if sum(comp) != self.n:
            raise ProblemError(f"type counts sum to {sum(comp)}, not n = {self.n}")
        object.__setattr__(self, "composition", comp)

    def log_size(self) -> float:
        """ln of the number of sequences with this composition."""
        return _log_multinomial(self.n, self.composition)

    def log_prob(self, p) -> float:
        """ln Pr{X in T(t)} for X i.i.d. p."""
        lp = 0.0
        for c, w in zip(self.composition, p):
            if c:
                if w <= 0:
                    return -math.inf
                lp += c * math.log(w)
        return self.log_size() + lp


def codebook_size(n: int, R: float, extra: int = 0) -> int:
    x = n * R
    if x > 700:
        raise ScaleError(f"codebook size e^(nR) with nR = {x:g} overflows")
    # guard against e^(nR) landing a hair above an integer
    return int(math.ceil(math.exp(x) * (1 - 1e-12))) + extra


@dataclass(frozen=True)
class CodebookSpec:
    n: int
    R: float
    M: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("blocklength must be positive")
        if self.R < 0:
            raise ValueError("rate must be nonnegative")
        if self.M < 1:
            raise ValueError("codebook needs at least one codeword")

    @classmethod
    def source(cls, n: int, R: float) -> "CodebookSpec":
        """M = ceil(e^{nR}) codewords."""
        return cls(n, R, codebook_size(n, R))

    @classmethod
    def channel(cls, n: int, R: float) -> "CodebookSpec":
        """M = ceil(e^{nR}) + 1 codewords (the transmitted one plus competitors)."""
        return cls(n, R, codebook_size(n, R, extra=1))


@dataclass(frozen=True)
class ExactProbability:
    log_value: float
    method: str
    ci_halfwidth: Optional[float] = None
    trials: Optional[int] = None
    errors: Optional[int] = None
    rng: Optional[str] = None

    def __post_init__(self):
        if self.method not in ("enumeration", "dp", "monte_carlo"):
            raise ValueError(f"unknown method {self.method!r}")
        if math.isnan(self.log_value) or self.log_value > 1e-12:
            raise ValueError(f"log probability must be <= 0, got {self.log_value}")
        object.__setattr__(self, "log_value", min(float(self.log_value), 0.0))
        if (self.ci_halfwidth is not None) != (self.method == "monte_carlo"):
            raise ValueError("confidence interval present iff method is monte_carlo")

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


@lru_cache(maxsize=None)
def _log_factorials(n: int) -> np.ndarray:
    return np.array([math.lgamma(k + 1) for k in range(n + 1)])


def _log_multinomial(n, counts) -> float:
    lf = _log_factorials(n)
    return float(lf[n] - sum(lf[c] for c in counts))


def _log_success_from_miss(log_miss):
    """ln(1 - exp(log_miss)) with log_miss in [-inf, 0]."""
    with np.errstate(divide="ignore"):
        return np.where(log_miss == 0.0, -np.inf, np.log(-np.expm1(log_miss)))


def _log_miss(M, p):
    """ln((1 - p)^M), -inf when p = 1."""
    with np.errstate(divide="ignore"):
        return np.where(p >= 1.0, -np.inf, M * np.log1p(-np.minimum(p, 1.0)))


# -- source ---------------------------------------------------------------------

def _scaled_rows(problem: SourceProblem, n: int):
    """Integer distortion table on supp P x supp Q and the integer threshold for nD."""
    rat = problem.d.exact()
    sp = np.nonzero(support(problem.P))[0]
    sq = np.nonzero(support(problem.Q))[0]
    D = problem.D_exact if problem.D_exact is not None else parse_rational(problem.D)
    entries = [rat[i][j] for i in sp for j in sq]
    lcd = 1
    for f in entries + [D]:
        lcd = lcd * f.denominator // math.gcd(lcd, f.denominator)
    table = np.array([[int(rat[i][j] * lcd) for j in sq] for i in sp], dtype=np.int64)
    threshold = math.floor(n * D * lcd)
    return sp, sq, table, threshold


def _row_powers(pmf: np.ndarray, n: int):
    out = [np.ones(1)]
    for _ in range(n):
        out.append(np.convolve(out[-1], pmf))
    return out


def _cover_probs(problem: SourceProblem, n: int):
    """(types over supp P, log Pr{type}, p(t) = Pr{d(x, Xhat) <= nD} per type)."""
    sp, sq, table, threshold = _scaled_rows(problem, n)
    q = problem.Q[sq]
    lo = table.min(axis=1)
    width = table.max(axis=1) - lo
    if n * int(width.sum()) > MAX_SCALED_RANGE:
        raise ScaleError(f"scaled distortion range {n * int(width.sum())} exceeds {MAX_SCALED_RANGE}")
    types = compositions(n, len(sp))
    if len(types) * (n * int(width.sum()) + 1) > MAX_SOURCE_WORK:
        raise ScaleError(f"{len(types)} types at blocklength {n} exceed the oracle budget")
    powers = []
    for row, base, w in zip(table, lo, width):
        pmf = np.zeros(int(w) + 1)
        np.add.at(pmf, row - base, q)
        powers.append(_row_powers(pmf, n))
    logp = np.log(problem.P[sp])
    log_type = np.array([_log_multinomial(n, t) + float(t @ logp) for t in types])
    cover = np.empty(len(types))
    for k, t in enumerate(types):
        dist = np.ones(1)
        for x, c in enumerate(t):
            if c:
                dist = np.convolve(dist, powers[x][c])
        # dist[j] is the probability of a scaled sum equal to offset + j
        cut = threshold - int(t @ lo)
        if cut < 0:
            cover[k] = 0.0
        else:
            cover[k] = min(1.0, float(dist[: cut + 1].sum()))
    return types, log_type, cover


def exact_success_prob(problem: SourceProblem, spec: CodebookSpec) -> ExactProbability:
    """Pr{some codeword has d(X, Xhat_m) <= nD}, summed over source types."""
    _, log_type, cover = _cover_probs(problem, spec.n)
    log_hit = _log_success_from_miss(_log_miss(spec.M, cover))
    return ExactProbability(logsumexp(log_type + log_hit), "dp")


def exact_failure_prob(problem: SourceProblem, spec: CodebookSpec) -> ExactProbability:
    """Pr{no codeword within nD}, summed in the log domain (not 1 - success)."""
    _, log_type, cover = _cover_probs(problem, spec.n)
    return ExactProbability(logsumexp(log_type + _log_miss(spec.M, cover)), "dp")


# -- channel --------------------------------------------------------------------

def _check_channel_scale(cp, n):
    nx, ny = cp.channel.shape
    if n > 20 or nx > 3 or ny > 3:
        raise ScaleError(f"channel oracle limited to n <= 20 and |X|,|Y| <= 3, got n={n}, {nx}x{ny}")


class _CompetitorLaw:
    """Distribution of sum_i ln P(y_i | Xhat_i), Xhat i.i.d. Q, per y-composition."""

    def __init__(self, cp):
        self.q = cp.Q
        self.logw = np.log(cp.channel)
        self.cache = {}

    def atoms(self, ny):
        if ny in self.cache:
            return self.cache[ny]
        sq = np.nonzero(support(self.q))[0]
        logq = np.log(self.q[sq])
        vals = np.zeros(1)
        logs = np.zeros(1)
        for y, m in enumerate(ny):
            if m == 0:
                continue
            cs = compositions(m, len(sq))
            v = cs @ self.logw[sq, y]
            lp = np.array([_log_multinomial(m, c) for c in cs]) + cs @ logq
            vals = (vals[:, None] + v[None, :]).ravel()
            logs = (logs[:, None] + lp[None, :]).ravel()
        order = np.argsort(vals, kind="stable")
        vals, probs = vals[order], np.exp(logs[order])
        tail = np.cumsum(probs[::-1])[::-1]  # tail[i] = Pr{V >= vals[i]}
        self.cache[ny] = (vals, tail)
        return vals, tail

    def tail_prob(self, ny, level):
        """Pr{V >= level}, with ties within TIE_TOL counted."""
        vals, tail = self.atoms(ny)
        i = int(np.searchsorted(vals, level - TIE_TOL * max(1.0, abs(level)), side="left"))
        if i == 0:
            return 1.0  # every atom clears the level
        return float(min(1.0, tail[i])) if i < len(vals) else 0.0


def _joint_types(n, nx, ny):
    return compositions(n, nx * ny)


def competitor_cover_prob(cp, x_seq, y_seq) -> float:
    """q = Pr_{Xhat ~ Q^n}{sum_i ln P(y_i|x_i)/P(y_i|Xhat_i) <= nD} for given sequences."""
    x_seq = np.asarray(x_seq, dtype=int)
    y_seq = np.asarray(y_seq, dtype=int)
    n = len(x_seq)
    nx, ny = cp.channel.shape
    t = np.zeros(nx * ny, dtype=int)
    np.add.at(t, x_seq * ny + y_seq, 1)
    return _type_cover(cp, _CompetitorLaw(cp), t.reshape(nx, ny), n)


def _type_cover(cp, law, t, n):
    level = float(np.sum(t * law.logw)) - n * cp.D
    return law.tail_prob(tuple(int(c) for c in t.sum(axis=0)), level)


def exact_channel_error_prob(cp, spec: CodebookSpec) -> ExactProbability:
    """Error probability of the simplified decoder with M - 1 i.i.d. competitors.

    An error occurs when some competitor's LLR sum is <= nD.
    """
    n = spec.n
    _check_channel_scale(cp, n)
    nx, ny = cp.channel.shape
    competitors = spec.M - 1
    if competitors == 0:
        return ExactProbability(-math.inf, "enumeration")
    joint = cp.joint.ravel()
    logj = np.full(joint.shape, -np.inf)
    logj[joint > 0] = np.log(joint[joint > 0])
    law = _CompetitorLaw(cp)
    terms = []
    for t in _joint_types(n, nx, ny):
        if np.any((t > 0) & (joint <= 0)):
            continue
        lt = _log_multinomial(n, t) + float(np.sum(t[t > 0] * logj[t > 0]))
        q = _type_cover(cp, law, t.reshape(nx, ny), n)
        terms.append(lt + float(_log_success_from_miss(_log_miss(competitors, np.array(q)))))
    return ExactProbability(logsumexp(np.array(terms)), "enumeration")


# -- Monte Carlo ----------------------------------------------------------------

def wilson_interval(errors: int, trials: int, z: float = 1.0):
    """(lower, upper) Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = errors / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _draw(rng, cum, shape):
    u = rng.random(shape)
    return np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)


def _check_decoder(decoder):
    if decoder not in ("simplified", "optimum", "optimum_tradeoff"):
        raise ValueError(f"unknown decoder {decoder!r}")
    return "simplified" if decoder == "simplified" else "optimum"


def mc_decisions(cp, spec: CodebookSpec, trials: int, seed: int = 0, batch: int = 4096):
    """Per-trial (simplified error, optimum error, tie) flags from one seeded run.

    Message 0 is sent; codewords are i.i.d. Q.  The simplified decoder errs
    iff some competitor has LLR sum <= nD, the optimum tradeoff decoder iff
    ln P(y|x_0) - ln sum_{m>0} P(y|x_m) < nD.  A tie is a competitor whose
    LLR sum equals nD to within the tie tolerance.  The draws do not depend
    on the decoder, so both decisions see the same channel realizations.
    """
    n, M = spec.n, spec.M
    logw = np.log(cp.channel)
    cum_q = np.cumsum(cp.Q)
    cum_w = np.cumsum(cp.channel, axis=1)
    rng = np.random.Generator(np.random.Philox(seed))
    nD = n * cp.D
    tol = TIE_TOL * max(1.0, abs(nD))
    simp, opt, tie = [], [], []
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        code = _draw(rng, cum_q, (b, M, n))
        u = rng.random((b, n))
        rows = cum_w[code[:, 0, :]]
        y = np.minimum((u[..., None] >= rows).sum(axis=-1), cp.channel.shape[1] - 1)
        # log-likelihoods sum_i ln P(y_i | x_m,i) for every codeword
        ll = logw[code, y[:, None, :]].sum(axis=2)
        if M == 1:
            empty = np.zeros(b, dtype=bool)
            simp.append(empty), opt.append(empty), tie.append(empty)
        else:
            llr = ll[:, :1] - ll[:, 1:]
            simp.append(np.any(llr <= nD + tol, axis=1))
            opt.append(ll[:, 0] - logsumexp(ll[:, 1:], axis=1) < nD - tol)
            tie.append(np.any(np.abs(llr - nD) <= tol, axis=1))
        done += b
    return np.concatenate(simp), np.concatenate(opt), np.concatenate(tie)


def mc_simulate(cp, spec: CodebookSpec, decoder: str = "simplified", trials: int = 10**4, seed: int = 0,
                batch: int = 4096, z: float = 1.0) -> ExactProbability:
    """Monte Carlo estimate of the decoding error probability (see :func:`mc_decisions`).

    The reported ``ci_halfwidth`` is half the width of the log of the Wilson
    interval at ``z`` standard errors.
    """
    which = _check_decoder(decoder)
    if trials < 1000:
        raise ValueError("at least 1000 trials are required")
    simp, opt, _ = mc_decisions(cp, spec, trials, seed, batch)
    errors = int((simp if which == "simplified" else opt).sum())
    p = errors / trials
    lo, hi = wilson_interval(errors, trials, z)
    half = 0.5 * (math.log(hi) - math.log(lo)) if lo > 0 else math.inf
    logp = math.log(p) if p > 0 else -math.inf
    return ExactProbability(logp, "monte_carlo", half, trials, errors, RNG_ALGORITHM)


# -- Bernoulli union bound check --------------------------------------------------

def union_bound_margin(I: float, R: float, n: int) -> float:
    """ln of the relative gap in (1 - e^{-nI})^{e^{nR}} < exp(-e^{n(R - I)}).

    Taking -ln of both sides, the claim reads e^{nR} (-ln(1 - x)) > e^{n(R - I)}
    with x = e^{-nI}, i.e. -ln(1 - x)/x > 1.  The returned value is
    ln(-ln(1 - x)/x - 1), computed from the series sum_k x^k/(k+1) when x is
    small so that it stays finite even where e^{-nI} underflows.
    Requires R - I > 0.
    """
    eps = R - I
    if not eps > 0:
        raise ValueError(f"need R - I > 0, got R - I = {eps}")
    if I < 0:
        raise ValueError("I must be nonnegative")
    log_x = -n * I
    if math.exp(log_x) >= 1.0:
        return math.inf  # left side is (1 - 1)^M = 0
    if log_x > math.log(1e-3):
        x = math.exp(log_x)
        return math.log(-math.log1p(-x) / x - 1)
    x = math.exp(log_x)
    series = sum(x ** (k - 1) / (k + 1) for k in range(1, 7))
    return log_x + math.log(series)


def lemma2_check(I: float, R: float, n: int) -> bool:
    """Log-domain check of (1 - e^{-nI})^{e^{nR}} < exp(-e^{n(R - I)}); requires R - I > 0."""
    return union_bound_margin(I, R, n) > -math.inf
