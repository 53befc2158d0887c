import numpy as np
import pytest
from scipy.linalg import expm

from slnqubit.bath import BathSpec
from slnqubit.model import TransmonSpec, diagonalize_transmon, ideal_qubit
from slnqubit.solvers.superop import (
    ChebyshevPropagator,
    SledGenerators,
    SlnGenerators,
    commutator,
    dissipator,
    hermitian_basis,
    taylor_apply,
)

RNG = np.random.default_rng(0)


def _rand_density(n):
    a = RNG.normal(size=(n, n)) + 1j * RNG.normal(size=(n, n))
    r = a @ a.conj().T
    return r / np.trace(r)


def test_row_major_convention():
    A, B, R = (RNG.normal(size=(3, 3)) for _ in range(3))
    lhs = (A @ R - R @ A).reshape(-1)
    np.testing.assert_allclose(commutator(A) @ R.reshape(-1), lhs, atol=1e-12)
    c = RNG.normal(size=(3, 3))
    D = dissipator(c) @ R.reshape(-1)
    ref = c @ R @ c.T - 0.5 * (c.T @ c @ R + R @ c.T @ c)
    np.testing.assert_allclose(D, ref.reshape(-1), atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_hermitian_basis_orthonormal(n):
    U = hermitian_basis(n)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(n * n), atol=1e-14)
    rho = _rand_density(n)
    v = (U.conj().T @ rho.reshape(-1))
    assert np.max(np.abs(v.imag)) < 1e-14


@pytest.mark.parametrize("model", [ideal_qubit(), diagonalize_transmon(TransmonSpec(50.0, 1.0, 3))])
def test_sled_generators_real_and_trace_preserving(model):
    b = BathSpec(0.2, 50.0, 5.0, omega_q_ref=model.omega_q)
    g = SledGenerators(model, b)
    rho = _rand_density(model.n)
    v = g.to_vector(rho)
    np.testing.assert_allclose(g.to_matrix(v), rho, atol=1e-14)
    tr = g.observable_matrix([np.eye(model.n)])[:, 0].real
    for L in (g.L0, g.L1, g.D):
        assert np.isrealobj(L)
        assert abs(tr @ (L @ v)) < 1e-12


def test_sln_generators_structure():
    g = SlnGenerators(ideal_qubit())
    rho = _rand_density(2)
    v = g.to_vector(rho)
    tr = g.observable_matrix([np.eye(2)])[:, 0]
    assert abs(tr @ (g.A @ v)) < 1e-14
    # d tr / dt from the anticommutator is 2 i tr(q rho)
    q = np.array([[0, 1], [1, 0]])
    assert tr @ (g.B @ v) == pytest.approx(2j * np.trace(q @ rho))


@pytest.mark.parametrize("xmax", [4.0, 64.0, 128.0])
def test_chebyshev_matches_expm(xmax):
    g = SledGenerators(ideal_qubit(), BathSpec(0.2, 50.0, 5.0))
    h = 2.0**-7
    cheb = ChebyshevPropagator(g.L0, g.L1, h, xmax)
    xs = np.array([-xmax, -0.3 * xmax, 0.0, 0.77 * xmax, xmax])
    for x in xs:
        np.testing.assert_allclose(cheb.matrix(x), expm(h * (g.L0 + x * g.L1)), atol=1e-13)
    v = RNG.normal(size=(xs.size, 4))
    out = cheb.apply(v, cheb.chebyshev_values(xs))
    ref = np.array([expm(h * (g.L0 + x * g.L1)) @ vi for x, vi in zip(xs, v)])
    np.testing.assert_allclose(out, ref, atol=1e-13)
    with pytest.raises(ValueError):
        cheb.chebyshev_values(np.array([2 * xmax]))


def test_taylor_apply_matches_expm():
    G = RNG.normal(size=(6, 9, 9)) * 3
    v = RNG.normal(size=(6, 9))
    h = 0.05
    out = taylor_apply(G, v, h)
    ref = np.array([expm(h * Gi) @ vi for Gi, vi in zip(G, v)])
    np.testing.assert_allclose(out, ref, rtol=1e-12, atol=1e-12)
