"""Weak-coupling Lindblad baselines.

Rates follow the golden rule in the system eigenbasis: a transition k -> m
with omega_km > 0 has downward rate J(omega_km) |q_km|^2 (n + 1) and upward
rate J(omega_km) |q_km|^2 n, so each bath obeys detailed balance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..bath import BathSpec, IntrinsicBathSpec, bose_occupation, spectral_density
from ..model import PulseSpec, SystemModel
from .stochastic import default_observables
from .superop import commutator, dissipator

__all__ = [
    "LindbladSpec",
    "LindbladResult",
    "TwoBathResult",
    "lindblad_generator",
    "lindblad_evolve",
    "lindblad_two_bath",
]


@dataclass(frozen=True)
class LindbladSpec:
    """Transition rates; ``down[k, m]`` and ``up[k, m]`` are used for k > m only.

    ``down[k, m]`` is the rate of |k> -> |m>, ``up[k, m]`` that of |m> -> |k>.
    """

    down: np.ndarray
    up: np.ndarray
    beta: float = math.inf
    intrinsic: IntrinsicBathSpec | None = None
    kappa_T: float = 0.0

    def __post_init__(self):
        down, up = np.asarray(self.down, float), np.asarray(self.up, float)
        if down.shape != up.shape or down.ndim != 2 or down.shape[0] != down.shape[1]:
            raise ValueError("rate matrices must be square and of equal shape")
        if np.any(down < 0) or np.any(up < 0):
            raise ValueError("rates must be non-negative")
        object.__setattr__(self, "down", down)
        object.__setattr__(self, "up", up)

    @classmethod
    def from_bath(cls, model: SystemModel, bath: BathSpec,
                  intrinsic: IntrinsicBathSpec | None = None) -> "LindbladSpec":
        n = model.n
        q2 = np.abs(model.q) ** 2
        down, up = np.zeros((n, n)), np.zeros((n, n))
        for k in range(n):
            for m in range(k):
                w = model.omega[k] - model.omega[m]
                J = spectral_density(bath, w)
                nb = bose_occupation(bath.beta, w)
                down[k, m] = J * q2[k, m] * (nb + 1)
                up[k, m] = J * q2[k, m] * nb
                if intrinsic is not None:
                    down[k, m] += intrinsic.gamma * q2[k, m] * (intrinsic.N_i + 1)
                    up[k, m] += intrinsic.gamma * q2[k, m] * intrinsic.N_i
        w01 = model.omega_q
        kT = spectral_density(bath, w01) * q2[1, 0] * (2 * bose_occupation(bath.beta, w01) + 1)
        return cls(down, up, bath.beta, intrinsic, float(kT))

    def rate_ratio(self, k: int, m: int) -> float:
        """up/down for the pair k > m; exp(-beta omega_km) for a single bath."""
        return float(self.up[k, m] / self.down[k, m])


def lindblad_generator(model: SystemModel, spec: LindbladSpec) -> np.ndarray:
    """Row-major superoperator of the Lindblad equation."""
    n = model.n
    if spec.down.shape != (n, n):
        raise ValueError("rate matrices do not match the model dimension")
    L = -1j * commutator(model.hamiltonian.astype(complex))
    for k in range(n):
        for m in range(k):
            c = np.zeros((n, n), complex)
            c[m, k] = 1.0
            if spec.down[k, m]:
                L = L + spec.down[k, m] * dissipator(c)
            if spec.up[k, m]:
                L = L + spec.up[k, m] * dissipator(c.T.copy())
    return L


@dataclass
class LindbladResult:
    times: np.ndarray
    names: list
    values: np.ndarray  # (n_times, n_obs) complex
    rho: np.ndarray

    def series(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)].real


def lindblad_evolve(model: SystemModel, spec: LindbladSpec, h: float, n_steps: int, initial=None,
                    observables: dict | None = None, drive: PulseSpec | None = None) -> LindbladResult:
    """Propagate on the grid t = 0, h, ..., n_steps h.

    Without a drive the exact one-step propagator exp(h L) is reused. With a
    lab-frame drive A(t) cos(omega_q t) q the Hamiltonian is frozen at each step
    midpoint, as in the stochastic solvers.
    """
    n = model.n
    if initial is None:
        initial = np.zeros((n, n), complex)
        initial[1, 1] = 1
    obs = default_observables(n) if observables is None else dict(observables)
    W = np.stack([np.asarray(O, complex).T.reshape(-1) for O in obs.values()], axis=1)
    L = lindblad_generator(model, spec)
    v = np.asarray(initial, complex).reshape(-1).copy()
    out = np.empty((n_steps + 1, n * n), complex)
    out[0] = v
    if drive is None:
        P = expm(h * L)
        for l in range(n_steps):
            v = P @ v
            out[l + 1] = v
    else:
        D = -1j * commutator(model.q.astype(complex))
        t_mid = h * (np.arange(n_steps) + 0.5)
        amp = drive.amplitude(t_mid) * np.cos(model.omega_q * t_mid)
        P0 = expm(h * L)
        for l in range(n_steps):
            v = (P0 if amp[l] == 0 else expm(h * (L + amp[l] * D))) @ v
            out[l + 1] = v
    times = h * np.arange(n_steps + 1)
    return LindbladResult(times, list(obs), out @ W, out.reshape(-1, n, n))


@dataclass
class TwoBathResult:
    times: np.ndarray
    mean_n: np.ndarray
    populations: np.ndarray  # (n_times, n_levels)
    steady_occupation: float  # <n> at the last time
    closed_form: float


def _ladder_size(N: float, tol: float = 1e-14) -> int:
    if N == 0:
        return 8
    r = N / (N + 1)
    return max(8, int(math.ceil(math.log(tol) / math.log(r))) + 8)


def lindblad_two_bath(omega_q: float, kappa: float, N_ee: float, gamma: float, N_i: float,
                      times, initial=None, n_levels: int | None = None) -> TwoBathResult:
    """Harmonic-ladder populations under an engineered and an intrinsic bath.

    P_n' = [k(N_ee+1) + g(N_i+1)] {(n+1) P_{n+1} - n P_n}
         + [k N_ee + g N_i] {n P_{n-1} - (n+1) P_n}

    ``omega_q`` only labels the mode; populations decouple from coherences.
    The ladder is truncated where the thermal tail falls below 1e-14.
    """
    if kappa < 0 or gamma < 0 or N_ee < 0 or N_i < 0:
        raise ValueError("rates and occupations must be non-negative")
    if kappa + gamma == 0:
        raise ZeroDivisionError("kappa + gamma must be positive")
    closed = (kappa * N_ee + gamma * N_i) / (kappa + gamma)
    M = n_levels or _ladder_size(closed)
    down = kappa * (N_ee + 1) + gamma * (N_i + 1)
    up = kappa * N_ee + gamma * N_i
    R = np.zeros((M, M))
    for n in range(M):
        if n + 1 < M:
            R[n, n + 1] += down * (n + 1)
            R[n + 1, n] += up * (n + 1)
            R[n, n] -= up * (n + 1)
        R[n, n] -= down * n
    P0 = np.zeros(M)
    if initial is None:
        P0[0] = 1.0
    else:
        init = np.asarray(initial, float)
        P0[: init.size] = init
    times = np.asarray(times, float)
    pops = np.array([expm(t * R) @ P0 for t in times])
    mean_n = pops @ np.arange(M)
    return TwoBathResult(times, mean_n, pops, float(mean_n[-1]), closed)
