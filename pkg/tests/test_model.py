import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from slnqubit.model import (
    ChargeCutoffError,
    PulseSpec,
    SystemModel,
    TransmonSpec,
    diagonalize_transmon,
    drive_term,
    ideal_qubit,
    momentum_operator,
    pauli,
    relative_anharmonicity,
)


def test_ideal_qubit():
    m = ideal_qubit()
    assert m.n == 2 and m.omega_q == 1.0
    np.testing.assert_array_equal(m.q, pauli("x"))
    np.testing.assert_allclose(momentum_operator(m), pauli("y"), atol=1e-15)


def test_transmon_levels_and_coupling():
    m = diagonalize_transmon(TransmonSpec(E_J=50.0, E_C=1.0, n_levels=5))
    alpha = relative_anharmonicity(m)
    # absolute anharmonicity is close to -E_C, the plasma frequency close to sqrt(8 E_J E_C) - E_C
    assert alpha * m.omega_q == pytest.approx(-1.0, rel=0.2)
    assert m.omega_q == pytest.approx(math.sqrt(400) - 1, rel=0.02)
    assert abs(m.q[0, 1]) == pytest.approx(1.0)
    # nearest-neighbour matrix elements grow like sqrt(k + 1)
    ratio = abs(m.q[1, 2]) / abs(m.q[0, 1])
    assert ratio == pytest.approx(math.sqrt(2), rel=0.05)
    assert np.all(np.abs(np.diag(m.q)) < 1e-10)


def test_transmon_cutoff_too_small():
    with pytest.raises(ChargeCutoffError):
        diagonalize_transmon(TransmonSpec(E_J=200.0, E_C=1.0, n_levels=5, charge_cutoff=3))


def test_model_validation():
    with pytest.raises(ValueError):
        SystemModel(omega=np.array([0.0, 1.0]), q_op=np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        SystemModel(omega=np.array([1.0, 0.0]), q_op=pauli("x").real)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(0.0, 0.4))
def test_pulse_area_is_pi(g, rise_fraction):
    p = PulseSpec(g=g, rise_time=rise_fraction * math.pi / g)
    pts = [p.rise_time, p.rise_time + p.plateau_time] if p.rise_time > 0 else None
    area, _ = integrate.quad(lambda t: float(p.amplitude(t)), 0, p.duration, points=pts, limit=200)
    assert area == pytest.approx(math.pi, rel=1e-9)
    assert float(p.amplitude(p.duration / 2)) == pytest.approx(g)


def test_drive_term_outside_pulse():
    m = ideal_qubit()
    p = PulseSpec(g=0.1, rise_time=1.0)
    assert np.all(drive_term(m, p, p.duration + 1.0) == 0)
    with pytest.raises(ValueError):
        drive_term(m, p, -1.0)
