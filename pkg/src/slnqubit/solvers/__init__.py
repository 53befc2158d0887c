"""Stochastic and Lindblad propagation, steady-state extraction and fits."""

from .fitting import FitError, FitResult, extract_steady, fit_damped_cosine, steady_window
from .lindblad import (
    LindbladResult,
    LindbladSpec,
    TwoBathResult,
    lindblad_evolve,
    lindblad_generator,
    lindblad_two_bath,
)
from .stochastic import (
    NORM_BOUND,
    EnsembleStats,
    RunawayError,
    Trajectory,
    default_observables,
    evolve_with_noise,
    run_ensemble,
    run_trajectory,
    sled_step,
    sln_step,
)
from .superop import ChebyshevPropagator, SledGenerators, SlnGenerators, sled_generators, sln_generators

__all__ = [
    "FitError",
    "FitResult",
    "extract_steady",
    "fit_damped_cosine",
    "steady_window",
    "LindbladResult",
    "LindbladSpec",
    "TwoBathResult",
    "lindblad_evolve",
    "lindblad_generator",
    "lindblad_two_bath",
    "NORM_BOUND",
    "EnsembleStats",
    "RunawayError",
    "Trajectory",
    "default_observables",
    "evolve_with_noise",
    "run_ensemble",
    "run_trajectory",
    "sled_step",
    "sln_step",
    "ChebyshevPropagator",
    "SledGenerators",
    "SlnGenerators",
    "sled_generators",
    "sln_generators",
]
