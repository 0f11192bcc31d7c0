"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line; the lines are collected again in the
terminal summary under "acceptance criteria".
"""
import math
import time

import numpy as np
import pytest

import rcexp.channel as ch
import rcexp.finite_n as fn
import rcexp.source as src
from rcexp.core import DistortionSpec, SourceProblem
from rcexp.e0 import e0
from rcexp.rate import rate, rate_max
from rcexp.verification import (envelope_check, envelope_instance, list_regime_instance, random_channel,
                                random_distribution, reference_source, zero_region_check)


def _random_source(rng):
    nx, nk = rng.integers(2, 4, size=2)
    P = random_distribution(rng, nx, 0.02)
    Q = random_distribution(rng, nk, 0.02)
    d = rng.random((nx, nk))
    lo = float(P @ d.min(axis=1))
    hi = float(P @ (d @ Q))
    return SourceProblem(P, Q, d, lo + rng.random() * (hi - lo))


def _gap(a, b):
    if math.isinf(a) or math.isinf(b):
        return 0.0 if a == b else math.inf
    return abs(a - b)


def test_1_success_exponent_explicit_equals_implicit(report):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        pb = _random_source(rng)
        R = float(rng.uniform(0, 1.2 * rate(pb.P, pb.Q, pb.d, pb.D).rate))
        worst = max(worst, _gap(src.es_explicit(pb, R), src.es_implicit(pb, R, 1e-3)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and elapsed <= 120
    report("1. success exponent explicit = implicit", ok,
           f"max |diff| {worst:.3g} (tol 1e-3) on 50 sources, {elapsed:.1f} s (limit 120 s)")
    assert ok


def test_2_zero_threshold_rate_is_mutual_information(report):
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(50):
        cp = random_channel(rng, rng.integers(2, 4), rng.integers(2, 4))
        comp = ch.compile_channel(cp).composite
        r = rate(comp.P, comp.Q, comp.d, 0.0).rate
        # closed form sum Q P ln(P / (Q P)_y), independent of the compiled problem
        py = cp.Q @ cp.channel
        I = float(np.sum(cp.joint * np.log(cp.channel / py[None, :])))
        worst = max(worst, abs(r - I))
    ok = worst <= 1e-6
    report("2. R(Q∘P, Q, 0) = I", ok, f"max |diff| {worst:.3g} (tol 1e-6) on 50 channels")
    assert ok


def _gallager_direct(cp, R):
    # max over rho in [0,1] of -ln sum_y (sum_x Q W^{1/(1+rho)})^{1+rho} - rho R, on a fine grid then polished
    from scipy.optimize import minimize_scalar

    def f(rho):
        inner = cp.Q @ cp.channel ** (1 / (1 + rho))
        return -math.log(float(np.sum(inner ** (1 + rho)))) - rho * R

    grid = np.linspace(0, 1, 201)
    vals = [f(r) for r in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, 200)]
    res = minimize_scalar(lambda r: -f(r), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return max(vals[i], -res.fun)


def test_3_zero_threshold_error_exponent_is_gallager(report):
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(20):
        cp = random_channel(rng)
        I = ch.mutual_information(cp)
        for R in (0.0, 0.25 * I, 0.5 * I, I):
            a = ch.ee(cp, R)
            worst = max(worst, abs(a - ch.gallager_er(cp, R)), abs(a - _gallager_direct(cp, R)))
    ok = worst <= 1e-6
    report("3. ee(D=0) = random-coding exponent", ok, f"max |diff| {worst:.3g} (tol 1e-6) on 20 channels x 4 rates")
    assert ok


def test_4_ee_equals_forney_bound_and_holder(report):
    rng = np.random.default_rng(404)
    worst = 0.0
    holder = -math.inf
    grid = np.linspace(0.0, 2.0, 20)
    for _ in range(20):
        base = random_channel(rng)
        R = float(rng.uniform(0, ch.mutual_information(base)))
        for D in (0.0, 0.1, 0.5):
            cp = base.with_threshold(D)
            worst = max(worst, _gap(ch.ee(cp, R), ch.forney_bound(cp, R)))
            comp = ch.compile_channel(cp).composite
            for rho in np.linspace(0.05, 1.0, 20):
                top = e0(1 / (1 + rho), rho, comp)
                higher = grid[grid >= 1 / (1 + rho)]
                if higher.size:
                    holder = max(holder, float(np.max(e0(higher, rho, comp))) - top)
    ok = worst <= 1e-6 and holder <= 1e-12
    report("4. ee = forney_bound for D >= 0; Hölder monotonicity", ok,
           f"max |diff| {worst:.3g} (tol 1e-6); max E0(s,rho) - E0(1/(1+rho),rho) for s >= 1/(1+rho): "
           f"{holder:.3g} (tol 1e-12)")
    assert ok


def test_5_failure_exponent_envelope(report):
    env = envelope_check(envelope_instance(), points=200)
    zero = zero_region_check(list_regime_instance())
    ok = env.passed and zero.passed
    report("5. failure exponent envelope", ok,
           f"max deviation {env.deviation:.3g} (tol 2e-3) {env.detail}; below max-min threshold: "
           f"explicit {zero.deviation:.3g} {zero.detail}")
    assert ok


def test_6_forney_ordering(report):
    rng = np.random.default_rng(606)
    worst = -math.inf
    negative = 0
    for _ in range(50):
        D = float(rng.uniform(-0.5, 0.5))
        negative += D < 0
        cp = random_channel(rng, D=D)
        R = float(rng.uniform(0, 1.2 * ch.mutual_information(cp)))
        lower = ch.forney_bound(cp, R)
        upper = min(ch.forney_ee(cp, R), ch.ee(cp, R))
        if math.isinf(upper):
            continue
        worst = max(worst, lower - upper)
    ok = worst <= 1e-9 and negative > 0
    report("6. forney_bound <= min(forney_ee, ee)", ok,
           f"max excess {worst:.3g} (tol 1e-9) on 50 triples, {negative} with D < 0")
    assert ok


def test_7_correct_decoding_chain(report):
    rng = np.random.default_rng(707)
    chain = 0.0
    dk = -math.inf
    for _ in range(3):
        cp = random_channel(rng)
        I = ch.mutual_information(cp)
        for R in (1.2 * I, 1.6 * I + 0.05):
            a = ch.ml_correct_exponent(cp, R)
            b = ch.ml_correct_implicit(cp, R, 1e-2)
            c = ch.ml_correct_implicit_uw(cp, R, 1e-2)
            chain = max(chain, abs(a - b), abs(a - c))
            dk = max(dk, a - ch.dueck_korner_bound(cp, R, 1e-2))
    ok = chain <= 2e-3 and dk <= 1e-6
    report("7. correct-decoding exponent chain", ok,
           f"max disagreement {chain:.3g} (tol 2e-3); explicit - dueck_korner max {dk:.3g} (tol 1e-6)")
    assert ok


def test_8_finite_n_convergence(report):
    pb = reference_source()
    R = rate(pb.P, pb.Q, pb.d, pb.D).rate - 0.05
    es = src.es_implicit(pb, R, 1e-3)
    t0 = time.perf_counter()
    gaps = []
    for n in (8, 16, 32, 64):
        p = fn.exact_success_prob(pb, fn.CodebookSpec.source(n, R))
        gaps.append(abs(-p.log_value / n - es))
    elapsed = time.perf_counter() - t0
    mono = all(b <= a for a, b in zip(gaps, gaps[1:]))
    ok = mono and gaps[-1] <= 0.05 and elapsed <= 60
    report("8. finite-n success probability convergence", ok,
           "gaps " + ", ".join(f"{g:.4g}" for g in gaps) + f" (nonincreasing: {mono}; n=64 tol 0.05); "
           f"oracle {elapsed:.1f} s (limit 60 s)")
    assert ok


def test_9_channel_oracle_monte_carlo(report):
    cp = ch.ChannelProblem([0.5, 0.5], [[0.9, 0.1], [0.1, 0.9]], 0.0)
    spec = fn.CodebookSpec.channel(8, 0.2)
    exact = fn.exact_channel_error_prob(cp, spec).value
    mc = fn.mc_simulate(cp, spec, "simplified", 10**5, seed=2024)
    lo, hi = fn.wilson_interval(mc.errors, mc.trials)
    z = abs(mc.value - exact) / (0.5 * (hi - lo))
    ok = z <= 3.0
    report("9. Monte Carlo agrees with exact channel oracle", ok,
           f"|estimate - exact| = {z:.2f} Wilson SE (tol 3); exact {exact:.6g}, estimate {mc.value:.6g}")
    assert ok


def test_10_e0_threshold_identity(report):
    rng = np.random.default_rng(1010)
    worst = 0.0
    for _ in range(100):
        nx, nk = rng.integers(2, 5, size=2)
        P = random_distribution(rng, nx, 0.01)
        Q = random_distribution(rng, nk, 0.01)
        d = rng.random((nx, nk))
        D = float(rng.uniform(-1, 1))
        s, rho = rng.uniform(0, 3), rng.uniform(-1, 1)
        pb = SourceProblem(P, Q, d, D)
        worst = max(worst, abs(e0(s, rho, pb) - e0(s, rho, pb, D=0.0) + s * rho * D))
    ok = worst <= 1e-12
    report("10. E0 threshold shift identity", ok, f"max residual {worst:.3g} (tol 1e-12) on 100 tuples")
    assert ok


def test_11_bernoulli_union_bound(report):
    failures = []
    for I in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6):
        for eps in (0.05, 0.1):
            for n in (10, 20, 40):
                R = I + eps
                # -ln of the left side is e^{nR} * (-ln(1 - e^{-nI})); compare against e^{n eps} in logs
                lhs = n * R + math.log(-math.log1p(-math.exp(-n * I)))
                if not (fn.lemma2_check(I, R, n) and lhs > n * eps):
                    failures.append((I, R, n))
    ok = not failures
    report("11. (1 - e^{-nI})^{e^{nR}} < exp(-e^{n(R-I)}) on the grid", ok, f"{36 - len(failures)}/36 points hold")
    assert ok
