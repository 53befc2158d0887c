import math

import numpy as np
import pytest
from scipy.linalg import expm

from slnqubit.bath import BathSpec
from slnqubit.model import ideal_qubit, pauli
from slnqubit.noisegen import NoiseGrid
from slnqubit.solvers import (
    RunawayError,
    evolve_with_noise,
    run_ensemble,
    run_trajectory,
    sled_step,
    sln_step,
)
from slnqubit.solvers.stochastic import NORM_BOUND

H = 2.0**-7
RHO_E = np.diag([0.0, 1.0]).astype(complex)


def _unitary_step(rho, h):
    U = expm(-1j * h * np.diag([0.0, 1.0]))
    return U @ rho @ U.conj().T


def test_sled_step_closed_system():
    m = ideal_qubit()
    rho = 0.5 * np.array([[1, 1], [1, 1]], complex)
    out = sled_step(rho, m, BathSpec(0.0, 50, 5.0), 0.0, 0.1)
    np.testing.assert_allclose(out, _unitary_step(rho, 0.1), atol=1e-14)
    np.testing.assert_allclose(np.diag(sled_step(RHO_E, m, BathSpec(0.0, 50, 5.0), 0.0, 0.1)).real, [0, 1], atol=1e-15)


def test_sled_step_trace_exact_at_zero_temperature():
    out = sled_step(RHO_E, ideal_qubit(), BathSpec(0.3, 50, math.inf), 2.0, 0.1)
    assert abs(np.trace(out) - 1) < 1e-14
    np.testing.assert_allclose(out, out.conj().T, atol=1e-14)


def test_step_splitting_commutator_order():
    # one step with the mean noise vs two half steps with distinct noise
    m, b = ideal_qubit(), BathSpec(0.2, 50, 5.0)
    diffs = []
    hs = 0.1 * 2.0 ** -np.arange(5)
    for h in hs:
        one = sled_step(RHO_E, m, b, 1.0, h)
        two = sled_step(sled_step(RHO_E, m, b, 0.0, h / 2), m, b, 2.0, h / 2)
        diffs.append(np.abs(one - two).max())
    slope = np.polyfit(np.log(hs), np.log(diffs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.15)


def test_sln_step_trace_with_real_xi():
    out = sln_step(RHO_E, ideal_qubit(), 1.3, 0.0, 0.1)
    assert abs(np.trace(out) - 1) < 1e-14
    out = sln_step(RHO_E, ideal_qubit(), 0.0, 0.0, 0.1)
    np.testing.assert_allclose(out, _unitary_step(RHO_E, 0.1), atol=1e-12)


def test_step_runaway():
    with pytest.raises(RunawayError):
        sln_step(RHO_E, ideal_qubit(), 0.0, -1j * 1e3, 0.1)
    assert NORM_BOUND == 1e3


def test_trajectory_shape_and_determinism():
    m, b, g = ideal_qubit(), BathSpec(0.2, 50, 5.0), NoiseGrid(H, 256)
    a = run_trajectory(m, b, g, seed=3)
    c = run_trajectory(m, b, g, seed=3)
    assert a.values.shape == (257, 3) and a.names == ["rho_g", "rho_e", "rho_eg"]
    np.testing.assert_array_equal(a.values, c.values)
    tr = np.trace(a.rho, axis1=1, axis2=2)
    assert np.max(np.abs(tr - 1)) < 1e-10
    np.testing.assert_allclose(a.rho, np.conj(np.transpose(a.rho, (0, 2, 1))), atol=1e-10)


def test_chebyshev_path_matches_exact_steps():
    m, b, g = ideal_qubit(), BathSpec(0.2, 50, 5.0), NoiseGrid(H, 256)
    from slnqubit.noisegen import sled_noise_batch

    xi = sled_noise_batch(b, g, [9])[0][:100]
    exact = evolve_with_noise(m, b, xi, H, RHO_E)
    traj = run_trajectory(m, b, g, seed=9, n_evolve=100)
    np.testing.assert_allclose(traj.rho, exact, atol=1e-12)


def test_sln_path_matches_exact_steps():
    m, b, g = ideal_qubit(), BathSpec(0.1, 50, 1.0), NoiseGrid(H, 256)
    from slnqubit.noisegen import sln_noise_batch

    xi, nu = sln_noise_batch(b, g, [4])
    exact = evolve_with_noise(m, b, xi[0][:80], H, RHO_E, method="SLN", nu=nu[0][:80])
    traj = run_trajectory(m, b, g, seed=4, method="SLN", n_evolve=80)
    np.testing.assert_allclose(traj.rho, exact, atol=1e-11)


def test_zero_coupling_ensemble_is_closed_system():
    m, g = ideal_qubit(), NoiseGrid(H, 128)
    rho0 = 0.5 * np.array([[1, 1], [1, 1]], complex)
    for method in ("SLED", "SLN"):
        s = run_ensemble(m, BathSpec(0.0, 50, 5.0), g, 4, method=method, initial=rho0, record_rho=True)
        U = expm(-1j * g.n_steps * H * np.diag([0.0, 1.0]))
        np.testing.assert_allclose(s.rho_mean[-1], U @ rho0 @ U.conj().T, atol=1e-10)


def test_single_sample_flags_sigma():
    s = run_ensemble(ideal_qubit(), BathSpec(0.2, 50, 5.0), NoiseGrid(H, 64), 1)
    assert not s.sigma_defined
    assert np.all(np.isnan(s.sem_re))
    with pytest.raises(ValueError):
        run_ensemble(ideal_qubit(), BathSpec(0.2, 50, 5.0), NoiseGrid(H, 64), 0)


def test_sem_halves_when_samples_double():
    m, b, g = ideal_qubit(), BathSpec(0.2, 50, 5.0), NoiseGrid(H, 256)
    s1 = run_ensemble(m, b, g, 1024, seed=0)
    s2 = run_ensemble(m, b, g, 4096, seed=10**6)
    ratio = s1.series("rho_e")[1][-1] / s2.series("rho_e")[1][-1]
    assert ratio == pytest.approx(2.0, rel=0.2)


def test_window_stats_and_observables():
    m, b, g = ideal_qubit(), BathSpec(0.2, 50, 5.0), NoiseGrid(H, 256)
    obs = {"sz": pauli("z"), "one": np.eye(2)}
    s = run_ensemble(m, b, g, 64, observables=obs, windows=[(1.0, 2.0)])
    assert s.names == ["sz", "one"]
    np.testing.assert_allclose(s.mean[:, 1], 1.0, atol=1e-10)
    mean, sr, _ = s.window_stats[(1.0, 2.0)]
    assert mean.shape == (2,) and sr[0] > 0
    with pytest.raises(ValueError):
        run_ensemble(m, b, g, 4, windows=[(1.0, 10.0)])


def test_invalid_initial_state():
    with pytest.raises(ValueError):
        run_ensemble(ideal_qubit(), BathSpec(0.2, 50, 5.0), NoiseGrid(H, 64), 2, initial=np.eye(2))


def test_sln_runaway_is_reported():
    # low temperature and strong coupling make SLN trajectories blow up
    m, b, g = ideal_qubit(), BathSpec(0.2, 50, 5.0), NoiseGrid(H, 512)
    with pytest.raises(RunawayError):
        run_ensemble(m, b, g, 512, method="SLN")
    s = run_ensemble(m, b, g, 512, method="SLN", allow_runaway=True)
    assert s.n_runaway > 0 and s.n_samples == 512 - s.n_runaway
