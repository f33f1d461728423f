"""Synthesis and verification of parabolic F-equivalence feedbacks."""

from .analysis import (
    check_admissibility,
    cluster_eigenvalues,
    fattorini_rank,
    frequency_split,
    partition_channels,
    uniqueness_verdict,
)
from .config import Tolerances
from .models import ModelDescriptor, builtin_model, random_instance
from .simulation import SimConfig, fit_decay_rate, linear_propagator, simulate_linear, simulate_nonlinear
from .spectral import ControlOperator, SpectralOperator, default_delta, sobolev_norm, validate_operator
from .synthesis import assemble, build_tail, select_mu, solve_channel_feq, synthesize, validate_mu
from .verification import feq_residual, spectrum_shift_check, tail_regularity_check, transformation_conditioning

__all__ = [
    "ControlOperator", "ModelDescriptor", "SimConfig", "SpectralOperator", "Tolerances",
    "assemble", "build_tail", "builtin_model", "check_admissibility", "cluster_eigenvalues",
    "default_delta", "fattorini_rank", "feq_residual", "fit_decay_rate", "frequency_split",
    "linear_propagator", "partition_channels", "random_instance", "select_mu", "simulate_linear",
    "simulate_nonlinear", "sobolev_norm", "solve_channel_feq", "spectrum_shift_check", "synthesize",
    "tail_regularity_check", "transformation_conditioning", "uniqueness_verdict", "validate_mu",
    "validate_operator",
]
