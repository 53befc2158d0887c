"""Closed-system description: transmon spectrum, ideal qubit, coupling and drive.

All quantities use hbar = 1, so energies and angular frequencies share units.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "ChargeCutoffError",
    "TransmonSpec",
    "SystemModel",
    "PulseSpec",
    "diagonalize_transmon",
    "ideal_qubit",
    "relative_anharmonicity",
    "coupling_operator",
    "momentum_operator",
    "drive_term",
    "pauli",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
# |g> = |0> comes first, so sigma_z = |g><g| - |e><e|
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def pauli(name: str) -> np.ndarray:
    """Pauli matrix in the (|g>, |e>) = (|0>, |1>) basis."""
    return {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}[name].copy()


class ChargeCutoffError(RuntimeError):
    """Charge-basis truncation has not converged the kept levels."""


@dataclass(frozen=True)
class TransmonSpec:
    E_J: float
    E_C: float
    n_levels: int = 5
    charge_cutoff: int = 30

    def __post_init__(self):
        if self.E_J <= 0 or self.E_C <= 0:
            raise ValueError("E_J and E_C must be positive")
        if not 2 <= self.n_levels <= 2 * self.charge_cutoff + 1:
            raise ValueError("need 2 <= n_levels <= 2*charge_cutoff + 1")
        ratio = self.E_J / self.E_C
        if ratio < 1:
            raise ValueError(f"E_J/E_C = {ratio:g} is below 1")
        if ratio < 20:
            warnings.warn(f"E_J/E_C = {ratio:g} is outside the transmon regime", stacklevel=2)


@dataclass(frozen=True)
class SystemModel:
    """N-level system in its energy eigenbasis.

    ``omega`` holds the angular eigenfrequencies with the ground state at zero
    and ``q_op`` the raw matrix elements of the coupled operator. The solvers use
    :attr:`q`, which applies the normalization selected by ``normalize_coupling``.
    """

    omega: np.ndarray
    q_op: np.ndarray
    kind: str = "ideal_qubit"
    normalize_coupling: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        q = np.asarray(self.q_op, dtype=float)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "q_op", q)
        if self.kind not in ("ideal_qubit", "transmon"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if omega.ndim != 1 or q.shape != (omega.size, omega.size):
            raise ValueError("omega must be a vector and q_op a matching square matrix")
        if np.any(np.diff(omega) <= 0):
            raise ValueError("eigenfrequencies must be strictly increasing")
        if not np.allclose(q, q.T, atol=1e-12):
            raise ValueError("q_op must be symmetric")

    @property
    def n(self) -> int:
        return self.omega.size

    @property
    def omega_q(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @property
    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.omega)

    @property
    def q(self) -> np.ndarray:
        return coupling_operator(self, self.normalize_coupling)


def _transmon_levels(E_J, E_C, M, n_levels):
    charges = np.arange(-M, M + 1, dtype=float)
    diag = 4.0 * E_C * charges**2
    off = np.full(2 * M, -0.5 * E_J)
    energies, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_levels - 1))
    return energies, vecs, charges


def diagonalize_transmon(spec: TransmonSpec, check_convergence: bool = True) -> SystemModel:
    """Diagonalize ``4 E_C n^2 - E_J cos(phi)`` in the charge basis n = -M..M.

    The kept eigenvectors are phase-fixed so that <k|n|k+1> >= 0, which makes
    the coupling matrix reproducible across LAPACK builds.
    """
    M, N = spec.charge_cutoff, spec.n_levels
    energies, vecs, charges = _transmon_levels(spec.E_J, spec.E_C, M, N)
    if check_convergence:
        wider, _, _ = _transmon_levels(spec.E_J, spec.E_C, M + 5, N)
        a, b = energies[1:] - energies[0], wider[1:] - wider[0]
        rel = np.max(np.abs(a - b) / np.abs(b))
        if rel > 1e-9:
            raise ChargeCutoffError(
                f"charge_cutoff={M} too small: levels shift by {rel:.2e} when M grows by 5"
            )
    q = vecs.T @ (charges[:, None] * vecs)
    for k in range(N - 1):
        if q[k, k + 1] < 0:
            vecs[:, k + 1] *= -1
            q[k + 1, :] *= -1
            q[:, k + 1] *= -1
    q = 0.5 * (q + q.T)
    omega = energies - energies[0]
    return SystemModel(
        omega=omega,
        q_op=q,
        kind="transmon",
        meta={"E_J": spec.E_J, "E_C": spec.E_C, "charge_cutoff": M},
    )


def ideal_qubit(omega_q: float = 1.0) -> SystemModel:
    if omega_q <= 0:
        raise ValueError("omega_q must be positive")
    return SystemModel(omega=np.array([0.0, omega_q]), q_op=SIGMA_X.copy(), kind="ideal_qubit")


def relative_anharmonicity(model: SystemModel) -> float:
    if model.n < 3:
        raise ValueError("relative anharmonicity needs at least three levels")
    w = model.omega
    return float((w[2] - w[1]) / (w[1] - w[0]) - 1.0)


def coupling_operator(model: SystemModel, normalized: bool = True) -> np.ndarray:
    """Coupling matrix, optionally rescaled so that |<0|q|1>| = 1."""
    q = model.q_op.copy()
    if normalized:
        q /= abs(q[0, 1])
    return q


def momentum_operator(model: SystemModel, omega_ref: float | None = None) -> np.ndarray:
    """Conjugate of the coupling operator, ``i[H_S, q] / omega_ref``.

    For the ideal qubit with ``omega_ref = omega_q`` this is exactly sigma_y.
    """
    omega_ref = model.omega_q if omega_ref is None else omega_ref
    H, q = model.hamiltonian, model.q
    return 1j * (H @ q - q @ H) / omega_ref


@dataclass(frozen=True)
class PulseSpec:
    """Resonant trapezoidal pulse.

    ``g`` is the Rabi angular frequency on the plateau: in the frame rotating at
    omega_q the drive acts as (g/2) q, so the Bloch vector turns at rate g and the
    rotation angle is the time integral of the envelope.
    """

    g: float
    rise_time: float = 0.0
    total_area: float = math.pi
    carrier: str = "resonant"
    envelope: str = "trapezoid"

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("g must be positive")
        if self.rise_time < 0:
            raise ValueError("rise_time must be non-negative")
        if self.carrier != "resonant" or self.envelope != "trapezoid":
            raise ValueError("only resonant trapezoidal pulses are supported")
        if self.plateau_time < 0:
            raise ValueError("pulse too short for its rise time")

    @property
    def plateau_time(self) -> float:
        return self.total_area / self.g - self.rise_time

    @property
    def duration(self) -> float:
        return self.plateau_time + 2 * self.rise_time

    def amplitude(self, t):
        """Envelope A(t); vectorized over ``t``."""
        t = np.asarray(t, dtype=float)
        r, T = self.rise_time, self.duration
        if r > 0:
            with np.errstate(over="ignore"):
                shape = np.clip(np.minimum(t, T - t) / r, 0.0, 1.0)
        else:
            shape = ((t >= 0) & (t <= T)).astype(float)
        shape = np.where((t < 0) | (t > T), 0.0, shape)
        return self.g * shape


def drive_term(model: SystemModel, pulse: PulseSpec, t: float) -> np.ndarray:
    """Lab-frame drive ``A(t) cos(omega_q t) q``; zero outside the pulse."""
    if t < 0:
        raise ValueError("t must be non-negative")
    a = float(pulse.amplitude(t))
    return a * math.cos(model.omega_q * t) * model.q
