import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slnqubit.solvers import FitError, extract_steady, fit_damped_cosine, steady_window


class _Series:
    def __init__(self, t, y, e=None):
        self.times, self._y = np.asarray(t), np.asarray(y)
        self._e = np.zeros_like(self._y) if e is None else np.asarray(e)
        self.window_stats = {}

    def series(self, name):
        return self._y, self._e


def test_steady_constant_and_linear():
    t = np.linspace(0, 100, 1001)
    assert extract_steady(_Series(t, np.full(t.size, 0.3)), (90, 100))[0] == pytest.approx(0.3)
    m, _ = extract_steady(_Series(t, 2 * t + 1), (90.05, 97.3))
    assert m == pytest.approx(2 * (90.05 + 97.3) / 2 + 1, rel=1e-12)


def test_steady_default_window_and_errors():
    assert steady_window(0.1) == (90.0, 100.0)
    t = np.linspace(0, 50, 501)
    with pytest.raises(ValueError):
        extract_steady(_Series(t, t), kappa_T=0.1)
    with pytest.raises(ValueError):
        extract_steady(_Series(t, t))


def test_fit_exact_recovery():
    t = np.arange(0, 60, 0.05)
    r = fit_damped_cosine(t, np.exp(-0.1 * t) * np.cos(0.9 * t))
    assert abs(r.frequency - 0.9) < 1e-6
    assert r.decay == pytest.approx(0.1, abs=1e-6)


def test_fit_pure_cosine_has_no_decay():
    t = np.arange(0, 40, 0.02)
    r = fit_damped_cosine(t, 0.5 * np.cos(1.3 * t + 0.4))
    assert abs(r.decay) <= max(3 * r.decay_err, 1e-9)
    assert r.phase == pytest.approx(0.4, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.0, 0.2), st.floats(-3.0, 3.0), st.integers(0, 2**31))
def test_fit_recovers_noisy_parameters(Om, G, phi, seed):
    t = np.arange(0, 12 * 2 * np.pi / Om, 0.05)
    rng = np.random.default_rng(seed)
    sig = 0.01
    y = np.exp(-G * t) * np.cos(Om * t + phi) + sig * rng.normal(size=t.size)
    r = fit_damped_cosine(t, y, sigma=np.full(t.size, sig))
    assert abs(r.frequency - Om) < 6 * r.frequency_err + 1e-9


def test_fit_needs_three_oscillations():
    t = np.arange(0, 10, 0.05)
    with pytest.raises(FitError):
        fit_damped_cosine(t, np.cos(0.9 * t))
    with pytest.raises(FitError):
        fit_damped_cosine(np.array([0.0, 1.0, 3.0]), np.zeros(3))
