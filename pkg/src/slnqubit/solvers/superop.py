"""Superoperators and batched propagators.

Density matrices are vectorized row-major, ``vec(rho) = rho.reshape(-1)``, so
``vec(A rho B) = kron(A, B.T) vec(rho)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

from ..bath import BathSpec
from ..model import SystemModel, momentum_operator

__all__ = [
    "left",
    "right",
    "commutator",
    "anticommutator",
    "dissipator",
    "hermitian_basis",
    "SledGenerators",
    "SlnGenerators",
    "sled_generators",
    "sln_generators",
    "ChebyshevPropagator",
    "taylor_apply",
]


def left(A: np.ndarray) -> np.ndarray:
    return np.kron(A, np.eye(A.shape[0]))


def right(B: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(B.shape[0]), B.T)


def commutator(A: np.ndarray) -> np.ndarray:
    return left(A) - right(A)


def anticommutator(A: np.ndarray) -> np.ndarray:
    return left(A) + right(A)


def dissipator(c: np.ndarray) -> np.ndarray:
    """D[c] rho = c rho c^+ - {c^+ c, rho}/2."""
    cd = c.conj().T
    cdc = cd @ c
    return np.kron(c, c.conj()) - 0.5 * (left(cdc) + right(cdc))


def hermitian_basis(n: int) -> np.ndarray:
    """Columns are vec(B_a) for a Hilbert-Schmidt orthonormal Hermitian basis.

    Order: diagonal projectors, then for each i < j the pair
    (|i><j| + |j><i|)/sqrt2 and i(|i><j| - |j><i|)/sqrt2... with the sign
    chosen so that the coefficient is sqrt2 Im rho_ij.
    """
    cols = []
    for i in range(n):
        B = np.zeros((n, n), complex)
        B[i, i] = 1
        cols.append(B.reshape(-1))
    s = 1 / math.sqrt(2)
    for i in range(n):
        for j in range(i + 1, n):
            B = np.zeros((n, n), complex)
            B[i, j] = B[j, i] = s
            cols.append(B.reshape(-1))
            B = np.zeros((n, n), complex)
            # tr(B rho) = s (i rho_ji - i rho_ij) = sqrt2 Im rho_ij
            B[i, j], B[j, i] = -1j * s, 1j * s
            cols.append(B.reshape(-1))
    return np.array(cols).T


class SledGenerators:
    """SLED generator split as L0 + xi * L1 (+ drive * D), in a real basis.

    L0 = -i[H,.] - (kappa/(2 beta omega_ref)) [q,[q,.]] - i(kappa/4) [q,{p,.}]
    L1 = i[q,.]
    D  = -i[q,.]  (multiplied by the instantaneous drive amplitude)
    """

    def __init__(self, model: SystemModel, bath: BathSpec):
        n = model.n
        q = model.q.astype(complex)
        p = momentum_operator(model, bath.omega_q_ref)
        H = model.hamiltonian.astype(complex)
        Cq = commutator(q)
        L0 = -1j * commutator(H) - 1j * (bath.kappa / 4) * Cq @ anticommutator(p)
        if not math.isinf(bath.beta):
            L0 = L0 - bath.kappa / (2 * bath.beta * bath.omega_q_ref) * Cq @ Cq
        U = hermitian_basis(n)
        self.basis = U
        self.n = n
        self.L0 = self._real(U, L0)
        self.L1 = self._real(U, 1j * Cq)
        self.D = self._real(U, -1j * Cq)

    @staticmethod
    def _real(U, L):
        G = U.conj().T @ L @ U
        if np.max(np.abs(G.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(G))):
            raise ValueError("generator does not preserve Hermiticity")
        return np.ascontiguousarray(G.real)

    def to_vector(self, rho: np.ndarray) -> np.ndarray:
        return (self.basis.conj().T @ np.asarray(rho, complex).reshape(-1)).real

    def to_matrix(self, v: np.ndarray) -> np.ndarray:
        """Works on trailing axis; returns (..., n, n)."""
        return (np.asarray(v) @ self.basis.T).reshape(*np.shape(v)[:-1], self.n, self.n)

    def observable_matrix(self, ops) -> np.ndarray:
        """Matrix W with tr(O_k rho) = (v @ W)[k]."""
        return np.stack([self.basis.T @ np.asarray(O, complex).T.reshape(-1) for O in ops], axis=1)


class SlnGenerators:
    """SLN generator L0 + xi * A + nu * B on row-major vec(rho).

    L0 = -i[H,.],  A = i[q,.],  B = i{q,.},  D = -i[q,.]
    """

    def __init__(self, model: SystemModel):
        q = model.q.astype(complex)
        self.n = model.n
        self.L0 = -1j * commutator(model.hamiltonian.astype(complex))
        self.A = 1j * commutator(q)
        self.B = 1j * anticommutator(q)
        self.D = -1j * commutator(q)

    def to_vector(self, rho):
        return np.asarray(rho, complex).reshape(-1).copy()

    def to_matrix(self, v):
        return np.asarray(v).reshape(*np.shape(v)[:-1], self.n, self.n)

    def observable_matrix(self, ops) -> np.ndarray:
        return np.stack([np.asarray(O, complex).T.reshape(-1) for O in ops], axis=1)


def sled_generators(model: SystemModel, bath: BathSpec) -> SledGenerators:
    return SledGenerators(model, bath)


def sln_generators(model: SystemModel) -> SlnGenerators:
    return SlnGenerators(model)


class ChebyshevPropagator:
    """exp(h (L0 + x L1)) for scalar x in [-xmax, xmax] as a Chebyshev series.

    The matrix exponential is entire in x, so the coefficients decay
    super-geometrically; the degree is raised until the last coefficients are
    below ``tol`` relative to the propagator norm.
    """

    def __init__(self, L0: np.ndarray, L1: np.ndarray, h: float, xmax: float,
                 tol: float = 1e-14, max_degree: int = 512):
        if xmax <= 0:
            raise ValueError("xmax must be positive")
        self.h, self.xmax, self.d = h, xmax, L0.shape[0]
        K = 8
        while True:
            coeffs = self._fit(L0, L1, K)
            scale = max(np.max(np.abs(coeffs[0])), 1.0)
            tail = max(np.max(np.abs(coeffs[-1])), np.max(np.abs(coeffs[-2])))
            if tail < tol * scale:
                break
            if K >= max_degree:
                raise RuntimeError("Chebyshev series did not converge; reduce h * xmax")
            K *= 2
        keep = K
        while keep > 2 and np.max(np.abs(coeffs[keep - 1])) < 0.1 * tol * scale:
            keep -= 1
        self.coeffs = coeffs[:keep]
        self.degree = keep
        # (d, K*d): v @ flat gives all C_k v at once (row-vector convention)
        self._flat = np.ascontiguousarray(np.transpose(self.coeffs, (2, 1, 0)).reshape(self.d, -1))

    def _fit(self, L0, L1, K):
        j = np.arange(K)
        nodes = np.cos(math.pi * (j + 0.5) / K)
        P = np.array([expm(self.h * (L0 + self.xmax * x * L1)) for x in nodes])
        T = np.cos(np.outer(np.arange(K), math.pi * (j + 0.5) / K))  # T_k(x_j)
        C = 2.0 / K * np.einsum("kj,jab->kab", T, P)
        C[0] *= 0.5
        return C

    def chebyshev_values(self, xi: np.ndarray) -> np.ndarray:
        """T_k(xi/xmax) with k on the leading axis; shape (degree,) + xi.shape."""
        x = np.asarray(xi, float) / self.xmax
        if np.any(np.abs(x) > 1 + 1e-12):
            raise ValueError("noise value outside the Chebyshev interval")
        out = np.empty((self.degree,) + x.shape)
        out[0] = 1.0
        if self.degree > 1:
            out[1] = x
        x2 = 2 * x
        for k in range(2, self.degree):
            np.multiply(x2, out[k - 1], out=out[k])
            out[k] -= out[k - 2]
        return out

    def matrix(self, xi: float) -> np.ndarray:
        t = self.chebyshev_values(np.array([xi], float))[:, 0]
        return np.tensordot(t, self.coeffs, axes=1)

    def apply(self, v: np.ndarray, tvals: np.ndarray) -> np.ndarray:
        """Propagate row vectors ``v`` (B, d) given T_k values of shape (degree, B)."""
        u = (v @ self._flat).reshape(v.shape[0], self.d, self.degree)
        # u[b, a, k] = sum_c C_k[a, c] v[b, c]
        return np.matmul(u, tvals.T[:, :, None])[:, :, 0]


def taylor_apply(G: np.ndarray, v: np.ndarray, h: float, theta: float = 0.5, order: int = 14):
    """exp(h G_b) v_b for a batch of generators G (B, d, d) and vectors v (B, d).

    Scaling: the step is split into s equal substeps with ||h G / s||_1 <= theta,
    each done by a truncated Taylor series of the given order.
    """
    norm = float(np.max(np.abs(G).sum(axis=1), initial=0.0)) * h
    s = max(1, math.ceil(norm / theta))
    hs = h / s
    for _ in range(s):
        term = v
        y = v.copy()
        for k in range(1, order + 1):
            term = np.einsum("bij,bj->bi", G, term) * (hs / k)
            y += term
        v = y
    return v
