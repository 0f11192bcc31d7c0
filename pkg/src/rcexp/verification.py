"""Self-check suites: each returns a list of :class:`Check` records."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from . import channel as ch
from . import finite_n as fn
from . import source as src
from .core import DistortionSpec, SourceProblem
from .e0 import e0_channel
from .rate import rate, rate_max


@dataclass
class Check:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: deviation {self.deviation:.3g} (tol {self.tolerance:g}) {self.detail}".rstrip()


def _check(name, dev, tol, detail="") -> Check:
    return Check(name, bool(dev <= tol), float(dev), tol, detail)


# -- random instances -----------------------------------------------------------

def random_distribution(rng, k, floor=0.0):
    p = rng.dirichlet(np.ones(k))
    if floor:
        p = (p + floor) / (1 + k * floor)
    return p


def random_source(rng, nx=2, nk=2) -> SourceProblem:
    P = random_distribution(rng, nx, 0.02)
    Q = random_distribution(rng, nk, 0.02)
    d = rng.random((nx, nk))
    lo = float((P @ d.min(axis=1)))
    D = lo + rng.random() * (float(P @ (d @ Q)) - lo)
    return SourceProblem(P, Q, d, D)


def random_channel(rng, nx=2, ny=2, D=0.0) -> ch.ChannelProblem:
    W = np.array([random_distribution(rng, ny, 0.02) for _ in range(nx)])
    return ch.ChannelProblem(random_distribution(rng, nx, 0.05), W, D)


# -- suites ---------------------------------------------------------------------

def _channel_e0_direct(s, rho, cp):
    # -ln sum_{x,y} Q(x)P(y|x) [sum_xhat Q(xhat) (P(y|xhat)/P(y|x))^s e^{sD}]^rho
    W = cp.channel
    ratio = W[None, :, :] / W[:, None, :]  # [x, xhat, y]
    inner = np.einsum("k,xky->xy", cp.Q, ratio**s) * math.exp(s * cp.D)
    return -math.log(float(np.sum(cp.joint * inner**rho)))


def suite_duality(seed=0, problems=None) -> List[Check]:
    rng = np.random.default_rng(seed)
    cps = problems or [random_channel(rng, rng.integers(2, 4), rng.integers(2, 4), rng.uniform(-0.5, 0.5))
                       for _ in range(20)]
    worst = 0.0
    for cp in cps:
        for s, rho in rng.uniform(0, 2, size=(5, 2)):
            a = e0_channel(s, rho, cp)
            b = _channel_e0_direct(s, rho, cp)
            worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return [_check("duality: compiled E0 matches direct channel E0", worst, 1e-12, f"({len(cps)} channels)")]


def suite_success_duality(seed=0, problems=None, count=50) -> List[Check]:
    rng = np.random.default_rng(seed)
    probs = problems or [random_source(rng) for _ in range(count)]
    worst = 0.0
    for pb in probs:
        rp = rate(pb.P, pb.Q, pb.d, pb.D).rate
        R = float(rng.uniform(0, 1.2 * rp)) if math.isfinite(rp) else 0.5
        a = src.es_explicit(pb, R)
        b = src.es_implicit(pb, R, 1e-3)
        if math.isinf(a) or math.isinf(b):
            dev = 0.0 if a == b else math.inf
        else:
            dev = abs(a - b)
        worst = max(worst, dev)
    return [_check("success: explicit vs implicit success exponent", worst, 1e-3, f"({len(probs)} sources)")]


def envelope_instance() -> SourceProblem:
    return SourceProblem([0.8, 0.2], [0.7, 0.3], DistortionSpec.hamming(2), 0.25)


def list_regime_instance() -> SourceProblem:
    # max_x min_xhat d = 0.3 exceeds D = 0.2
    return SourceProblem([0.8, 0.2], [0.7, 0.3], DistortionSpec.from_rationals([[0, 1], ["1/2", "3/10"]]),
                         0.2)


def envelope_check(pb: SourceProblem, points=200) -> Check:
    rm = rate_max(pb.Q, pb.d, pb.D)
    rates = np.linspace(0.0, rm, points)
    imp = src.sample_curve(src.ef_implicit, pb, rates)
    env = src.lower_convex_envelope(imp).values
    lce = np.array([src.ef_explicit_lce(pb, float(r)) for r in rates])
    dev = float(np.max(np.abs(env - lce)))
    return _check("envelope: explicit failure exponent is the envelope of the implicit one", dev, 2e-3,
                  f"({points} rates on [0, {rm:.6g}])")


def zero_region_check(pb: SourceProblem) -> Check:
    rp = rate(pb.P, pb.Q, pb.d, pb.D).rate
    rm = min(rate_max(pb.Q, pb.d, pb.D), rp + 1.0)  # R_max is infinite here when some row misses D
    # pick the rate above R(P) with the largest implicit failure exponent on a coarse grid
    rates = np.linspace(rp, rm, 12)[1:-1]
    vals = [src.ef_implicit(pb, float(r)) for r in rates]
    i = int(np.argmax(vals))
    lce = src.ef_explicit_lce(pb, float(rates[i]))
    ok = vals[i] >= 0.05 and lce == 0.0
    return Check("envelope: explicit failure exponent vanishes when D < max_x min_xhat d", ok, abs(lce), 0.0,
                 f"(R={rates[i]:.4g}, implicit={vals[i]:.4g})")


def suite_failure_envelope(seed=0, problems=None) -> List[Check]:
    pb = problems[0] if problems else envelope_instance()
    out = [envelope_check(pb)]
    if not problems:
        out.append(zero_region_check(list_regime_instance()))
    return out


def suite_forney_identity(seed=0, problems=None) -> List[Check]:
    rng = np.random.default_rng(seed)
    cps = problems or [random_channel(rng) for _ in range(20)]
    worst = 0.0
    holder = 0.0
    grid = np.linspace(0.0, 2.0, 20)
    for base in cps:
        I = ch.mutual_information(base)
        R = float(rng.uniform(0, I))
        for D in (0.0, 0.1, 0.5):
            cp = base.with_threshold(D)
            a, b = ch.ee(cp, R), ch.forney_bound(cp, R)
            worst = max(worst, abs(a - b) if math.isfinite(a) or math.isfinite(b) else 0.0)
            # E0(1/(1+rho), rho) >= E0(s, rho) for s >= 1/(1+rho)
            for rho in np.linspace(0.05, 1.0, 20):
                top = e0_channel(1 / (1 + rho), rho, cp)
                for s in grid[grid >= 1 / (1 + rho)]:
                    holder = max(holder, e0_channel(s, rho, cp) - top)
    return [_check("forney: ee equals forney_bound for D >= 0", worst, 1e-6, f"({len(cps)} channels)"),
            _check("forney: E0(1/(1+rho), rho) dominates larger s", max(holder, 0.0), 1e-12)]


def suite_ml_chain(seed=0, problems=None) -> List[Check]:
    rng = np.random.default_rng(seed)
    cps = problems or [random_channel(rng) for _ in range(3)]
    chain = 0.0
    dk = 0.0
    for cp in cps:
        I = ch.mutual_information(cp)
        for R in (1.2 * I, 1.6 * I + 0.05):
            a = ch.ml_correct_exponent(cp, R)
            b = ch.ml_correct_implicit(cp, R, 1e-2)
            c = ch.ml_correct_implicit_uw(cp, R, 1e-2)
            chain = max(chain, abs(a - b), abs(a - c))
            dk = max(dk, a - ch.dueck_korner_bound(cp, R, 1e-2))
    return [_check("ml_chain: explicit, implicit-T and implicit-(U,W) agree", chain, 2e-3),
            _check("ml_chain: Dueck-Korner bound dominates explicit form", max(dk, 0.0), 1e-6)]


def reference_source() -> SourceProblem:
    return SourceProblem([0.8, 0.2], [0.5, 0.5], DistortionSpec.hamming(2), 0.25)


def convergence_gaps(pb: SourceProblem, R: float, ns=(8, 16, 32, 64)):
    es = src.es_implicit(pb, R, 1e-3)
    gaps = []
    for n in ns:
        p = fn.exact_success_prob(pb, fn.CodebookSpec.source(n, R))
        gaps.append(abs(-p.log_value / n - es))
    return es, gaps


def suite_finite_n(seed=0, problems=None) -> List[Check]:
    pb = problems[0] if problems else reference_source()
    R = rate(pb.P, pb.Q, pb.d, pb.D).rate - 0.05
    _, gaps = convergence_gaps(pb, R)
    mono = max(0.0, max(b - a for a, b in zip(gaps, gaps[1:])))
    out = [_check("finite_n: success-exponent gap nonincreasing in n", mono, 0.0,
                  "gaps " + ", ".join(f"{g:.4g}" for g in gaps)),
           _check("finite_n: gap at n=64", gaps[-1], 0.05)]
    cp = ch.ChannelProblem([0.5, 0.5], [[0.9, 0.1], [0.1, 0.9]], 0.0)
    spec = fn.CodebookSpec.channel(8, 0.2)
    exact = fn.exact_channel_error_prob(cp, spec).value
    mc = fn.mc_simulate(cp, spec, "simplified", 10**5, seed)
    lo, hi = fn.wilson_interval(mc.errors, mc.trials)
    se = 0.5 * (hi - lo)
    out.append(_check("finite_n: Monte Carlo within 3 standard errors of exact", abs(mc.value - exact) / se, 3.0,
                      f"(exact {exact:.6g}, estimate {mc.value:.6g})"))
    return out


SUITES: Dict[str, Callable] = {
    "duality": suite_duality,
    "thm1": suite_success_duality,
    "thm3": suite_failure_envelope,
    "lemma1": suite_forney_identity,
    "ml_chain": suite_ml_chain,
    "finite_n": suite_finite_n,
}

SOURCE_SUITES = ("thm1", "thm3", "finite_n")
CHANNEL_SUITES = ("duality", "lemma1", "ml_chain")


def run_suite(name: str, seed: int = 0, problem=None) -> List[Check]:
    """Run one suite (or ``all``); ``problem`` replaces the random instances where it applies."""
    names = list(SUITES) if name == "all" else [name]
    out = []
    for nm in names:
        if nm not in SUITES:
            raise ValueError(f"unknown suite {nm!r}")
        if problem is None:
            out.extend(SUITES[nm](seed))
            continue
        is_source = isinstance(problem, SourceProblem)
        if (nm in SOURCE_SUITES) != is_source:
            continue
        out.extend(SUITES[nm](seed, [problem]))
    return out
