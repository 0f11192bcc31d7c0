"""Random-coding exponents for lossy source coding and channel coding.

Channel decoding problems are compiled into source covering problems with a
log-likelihood-ratio distortion, so one set of exponent routines serves both.
"""
from .core import (INF, DistortionSpec, NotRationalError, ProblemError, ScaleError, SourceProblem,
                   kl_divergence)
from .rate import RateResult, rate, rate_many, rate_max, rate_primal_bruteforce
from .e0 import E0Args, E0Kernel, e0, e0_channel
from .source import (ExponentCurve, ef_explicit_lce, ef_implicit, es_explicit, es_implicit,
                     lower_convex_envelope, sample_curve)
from .channel import (ChannelProblem, CompiledDual, ExceptionalPointWarning, compile_channel, dmin_q,
                      dueck_korner_bound, ec_star_implicit, ec_star_lce, ee, forney_bound, forney_ee,
                      forney_exact, gallager_er, maximize_over_q, ml_correct_exponent, ml_correct_implicit,
                      ml_correct_implicit_uw, mutual_information)
from .finite_n import (CodebookSpec, ExactProbability, TypeClass, exact_channel_error_prob,
                       exact_failure_prob, exact_success_prob, lemma2_check, union_bound_margin, mc_simulate,
                       wilson_interval)

__version__ = "0.1.0"
