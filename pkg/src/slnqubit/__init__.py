"""Stochastic Liouville simulation of a qubit or transmon in an ohmic bath.

Modules: ``model`` (system Hamiltonians and pulses), ``bath`` (spectral
functions), ``noisegen`` (correlated Gaussian noise), ``solvers`` (SLN, SLED
and Lindblad propagation), ``analytics`` (closed-form oracles) and ``cli``.
Units: hbar = 1 and, by convention, omega_q = 1.
"""

from .bath import BathSpec, IntrinsicBathSpec
from .model import PulseSpec, SystemModel, TransmonSpec, diagonalize_transmon, ideal_qubit
from .noisegen import NoiseGrid

__version__ = "0.1.0"

__all__ = [
    "BathSpec",
    "IntrinsicBathSpec",
    "PulseSpec",
    "SystemModel",
    "TransmonSpec",
    "diagonalize_transmon",
    "ideal_qubit",
    "NoiseGrid",
    "__version__",
]
