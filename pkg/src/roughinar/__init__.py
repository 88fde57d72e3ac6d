"""Simulation and numerical-verification lab for heavy-tailed nearly-unstable
INAR processes and their rough fractional diffusion scaling limits."""

__version__ = "0.1.0"

from .kernels import (Kernel, ScalingFamily, build_power_law_kernel,
                      kernel_from_sequence, make_scaling_family,
                      scale_kernel, tail_constant_estimate)
from .renewal import (RenewalSequence, DiscreteDensity, convolve,
                      laplace_check, renewal_sequence, rho_density,
                      solve_renewal)
from .mlf import F_alpha_lambda, F_integral, f_alpha_lambda, ml
from .inar_sim import (PathRecord, RescaledPath, lemma2_decomposition_check,
                       lemma3_identity_check, mean_formula_check,
                       rescale, run_ensemble, simulate_inar, simulate_raw)
from .limit_sim import (LimitPath, kernel_weights, run_limit_ensemble,
                        simulate_limit, theorem1_consistency_check)
from .stats import (holder_exponent, ks_two_sample, bracket_error,
                    mclt_diagnostic)

from . import backend

__all__ = [
    "__version__", "backend",
    "Kernel", "ScalingFamily", "build_power_law_kernel",
    "kernel_from_sequence", "make_scaling_family", "scale_kernel",
    "tail_constant_estimate",
    "RenewalSequence", "DiscreteDensity", "convolve", "laplace_check",
    "renewal_sequence", "rho_density", "solve_renewal",
    "F_alpha_lambda", "F_integral", "f_alpha_lambda", "ml",
    "PathRecord", "RescaledPath", "lemma2_decomposition_check",
    "lemma3_identity_check", "mean_formula_check", "rescale",
    "run_ensemble", "simulate_inar", "simulate_raw",
    "LimitPath", "kernel_weights", "run_limit_ensemble", "simulate_limit",
    "theorem1_consistency_check",
    "holder_exponent", "ks_two_sample", "bracket_error", "mclt_diagnostic",
]
