import json

import numpy as np
import pytest

from slnqubit.bath import BathSpec, correlation_function
from slnqubit.noisegen import (
    NoiseGrid,
    dump_samples,
    excess_kurtosis,
    gaussian_stream,
    generate_sled_noise,
    generate_sln_noise,
    load_samples,
    sled_noise_batch,
    sln_noise_batch,
    target_correlations,
    validate_generator,
    window_w1,
    window_w2,
)

B = BathSpec(0.2, 50.0, 5.0)
G = NoiseGrid(2.0**-7, 1024)


def test_grid_validation():
    with pytest.raises(ValueError):
        NoiseGrid(0.01, 1000)
    assert G.size == 2048
    assert G.times[1] == G.h


def test_gaussian_stream_deterministic_and_normal():
    a, b = gaussian_stream(7, 100000), gaussian_stream(7, 100000)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, gaussian_stream(8, 100000))
    assert abs(a.mean()) < 5 / np.sqrt(a.size)
    assert abs(a.var() - 1) < 5 * np.sqrt(2 / a.size)
    k, se = excess_kurtosis(a)
    assert abs(k) < 4 * se


def test_windows_real_and_principal():
    w = G.omega
    w1 = window_w1(B, w)
    assert np.all(w1.imag == 0) and np.all(w1.real >= 0)
    w2 = window_w2(B, w)
    # principal branch: real part non-negative
    assert np.all(w2.real >= -1e-15)


def test_batch_matches_single():
    batch = sled_noise_batch(B, G, [3, 4])
    np.testing.assert_array_equal(batch[1], generate_sled_noise(B, G, 4).xi)
    xi, nu = sln_noise_batch(B, G, [5])
    s = generate_sln_noise(B, G, 5)
    np.testing.assert_array_equal(xi[0], s.xi)
    np.testing.assert_array_equal(nu[0], s.nu)


def test_targets_close_to_continuous_correlation():
    tg = target_correlations(B, G, 16)
    L = correlation_function(B, tg["lags"] * G.h)
    # band limiting removes the spectral mass above the grid Nyquist frequency
    np.testing.assert_allclose(tg["xixi"], L.real, rtol=0.03)
    pos = tg["xinu"][16:]
    np.testing.assert_allclose(pos[1:].imag, L.imag[1:], rtol=0.05, atol=0.02 * np.abs(L.imag).max())
    assert np.abs(tg["xinu"][:16]).max() < 0.02 * np.abs(L.imag).max()


@pytest.mark.parametrize("method", ["SLED", "SLN"])
def test_validation_small_ensemble(method):
    rep = validate_generator(B, G, 2000, seed=11, max_lag=32, method=method)
    assert rep.passed, rep.summary()


def test_validation_detects_wrong_amplitude():
    tg = target_correlations(B, G, 8)
    x = 1.1 * sled_noise_batch(B, G, range(2000))
    from slnqubit.noisegen import validate_noise

    rep = validate_noise({"sled": (x, x)}, {"sled": (tg["lags"], tg["sled"])})
    assert not rep.passed


def test_dump_and_load(tmp_path):
    path = dump_samples(tmp_path / "noise", B, G, [1, 2, 3], method="SLN")
    data, meta = load_samples(path)
    xi, nu = sln_noise_batch(B, G, [1, 2, 3])
    assert meta["method"] == "SLN"
    assert data.shape == (3, 4, G.n_steps)
    np.testing.assert_array_equal(data[:, 0] + 1j * data[:, 1], xi)
    np.testing.assert_array_equal(data[:, 2] + 1j * data[:, 3], nu)
    assert json.loads(json.dumps(meta)) == meta


def test_zero_coupling_gives_zero_noise():
    b0 = BathSpec(0.0, 50, 5)
    assert np.all(sled_noise_batch(b0, G, [0]) == 0)
    xi, nu = sln_noise_batch(b0, G, [0])
    assert np.all(xi == 0) and np.all(nu == 0)
