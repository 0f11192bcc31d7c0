"""Gallager-style E0(s, rho, Q, D) for source problems and its channel form."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SourceProblem


@dataclass(frozen=True)
class E0Args:
    s: float
    rho: float
    problem: SourceProblem

    def __post_init__(self):
        if self.s < 0:
            raise ValueError(f"s must be nonnegative, got {self.s}")


def e0_arrays(s, rho, logp, logq, d, D):
    """E0 on pre-reduced log-weights; ``s`` may be an array.

    -ln sum_x P(x) [sum_xhat Q(xhat) exp(-s (d(x,xhat) - D))]^rho, all in the
    log domain.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0):
        raise ValueError("s must be nonnegative")
    # log-weights are finite here, so the plain max shift is safe
    a = logq[None, None, :] - s_arr[:, None, None] * (d - D)[None, :, :]
    top = a.max(axis=2)
    inner = np.log(np.exp(a - top[..., None]).sum(axis=2)) + top
    b = logp[None, :] + rho * inner
    top = b.max(axis=1)
    val = -(np.log(np.exp(b - top[:, None]).sum(axis=1)) + top)
    if np.any(np.isnan(val)):
        raise OverflowError("E0 evaluation produced NaN")
    # s = 0 or rho = 0 make the bracket (or its power) exactly 1
    val = np.where((s_arr == 0.0) | (rho == 0) | (val == 0.0), 0.0, val)
    return val if np.ndim(s) else float(val[0])


def _reduced_logs(problem: SourceProblem):
    p, q, d = problem.reduced()
    return np.log(p), np.log(q), d


def e0(args_or_s, rho=None, problem: SourceProblem = None, D=None):
    """E0(s, rho, Q, D) of a source problem.

    Accepts either an :class:`E0Args` or ``(s, rho, problem)``; ``D``
    overrides the problem's threshold.
    """
    if isinstance(args_or_s, E0Args):
        s, rho, problem = args_or_s.s, args_or_s.rho, args_or_s.problem
    else:
        s = args_or_s
    logp, logq, d = _reduced_logs(problem)
    return e0_arrays(s, rho, logp, logq, d, problem.D if D is None else float(D))


class E0Kernel:
    """E0 with the reduced log-weights cached, for repeated evaluation."""

    def __init__(self, problem: SourceProblem):
        self.problem = problem
        self.logp, self.logq, self.d = _reduced_logs(problem)
        self.D = problem.D
        self.row_min = self.d.min(axis=1)

    def __call__(self, s, rho, D=None):
        return e0_arrays(s, rho, self.logp, self.logq, self.d, self.D if D is None else D)


def e0_channel(s, rho, cp) -> float:
    """Channel form of E0: the source E0 of the compiled composite problem."""
    from .channel import compile_channel

    return e0(s, rho, compile_channel(cp).composite)
