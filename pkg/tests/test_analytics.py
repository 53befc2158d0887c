import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slnqubit import analytics as an
from slnqubit.bath import BathSpec, QuadratureError

B = BathSpec(0.2, 50.0, 5.0)
B0 = BathSpec(0.2, 50.0, math.inf)


def test_f_and_phi_vanish_at_zero():
    assert an.universal_f(B, 0.0) == 0.0
    assert an.universal_phi(B, 0.0) == 0.0
    assert an.universal_excited_prob(B, 0.0) == 1.0


def test_f_matches_mpmath():
    # independent arbitrary-precision quadrature at one point
    t = 0.05
    c = lambda w: 1 / (1 + (w / 50) ** 2) ** 2  # noqa: E731
    g = lambda w: 2 * c(w) * mpmath.coth(2.5 * w) * (1 - mpmath.cos(w * t)) / w  # noqa: E731
    ref = mpmath.quadosc(g, [0, mpmath.inf], omega=t)
    assert an.universal_f(B, t) == pytest.approx(float(ref), rel=1e-8)


def test_f_short_time_limit():
    ratio = an.universal_f(B0, 0.1 / 50) / an.universal_f_short(B0, 0.1 / 50)
    assert ratio == pytest.approx(1.0, rel=0.02)
    assert an.universal_f_short(B0, 1 / 50) == pytest.approx(0.5)


def test_f_monotone_and_prob_bounds():
    t = np.linspace(0, 3, 61)
    f = an.universal_f(B, t)
    assert np.all(np.diff(f) >= 0)
    p = an.universal_excited_prob(B, t, f)
    assert np.all((p >= 0.5) & (p <= 1.0))
    assert np.all(p[1:] < 1.0)


def test_f_approaches_asymptotic_form():
    assert an.universal_f(B, 1.0) == pytest.approx(an.universal_f_asymptotic(B, 1.0), rel=1e-3)
    assert an.universal_f(B, 5.0) == pytest.approx(an.universal_f_asymptotic(B, 5.0), rel=1e-4)


def test_asymptotic_zero_crossing():
    t0 = math.exp(0.5 - an.EULER_GAMMA) / 50
    assert an.universal_f_asymptotic(B0, t0) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        an.universal_f_asymptotic(B0, 0.0)


def test_thermal_part():
    beta = 5.0
    assert an.universal_f_thermal(beta, beta / math.pi) == pytest.approx(2 * math.log(math.sinh(1.0)), rel=1e-12)
    assert an.universal_f_thermal(beta, 1e-9) == pytest.approx(0.0, abs=1e-15)
    x = 40.0
    t = x * beta / math.pi
    assert an.universal_f_thermal(beta, t) == pytest.approx(2 * x - 2 * math.log(2 * x), rel=1e-12)


def test_phi_linear_growth():
    # slope = 2 int_0^inf c(w) dw = pi omega_c / 2 for the Drude-squared cutoff
    slope = (an.universal_phi(B, 20.0) - an.universal_phi(B, 10.0)) / 10.0
    assert slope == pytest.approx(math.pi * 50 / 2, rel=1e-6)
    phi = an.universal_phi(B, np.linspace(0, 1, 21))
    assert np.all(np.diff(phi) >= 0)


def test_f_rejects_negative_time():
    with pytest.raises(ValueError):
        an.universal_f(B, -1.0)


def test_renormalized_frequency_limits():
    p = an.renormalized_frequency(0.0, 1.0, 50.0, 1.0)
    assert p.Omega == 1.0 and p.G == 1.0
    # zero temperature: bracket is exactly 1 and Omega = omega_eff
    p = an.renormalized_frequency(0.1, 1.0, 50.0, math.inf)
    assert p.bracket == 1.0 and p.Omega == p.omega_eff
    big = an.renormalized_frequency(0.1, 1.0, 50.0, 1e7)
    assert big.Omega == pytest.approx(p.Omega, rel=1e-9)
    with pytest.raises(ValueError):
        an.renormalized_frequency(0.5, 1.0, 50.0, 1.0)


def test_omega_near_point_nine():
    p = an.renormalized_frequency(0.1 / math.pi, 1.0, 50.0, 1.0)
    assert p.Omega == pytest.approx(0.9, rel=0.04)
    assert p.Omega < 1.0


@settings(max_examples=10, deadline=None)
@given(st.floats(0.002, 0.3), st.floats(0.5, 30.0))
def test_derivative_matches_finite_difference(K, beta):
    d = an.dOmega_domega_q(K, 1.0, 50.0, beta)
    eps = 1e-5
    fd = (an.renormalized_frequency(K, 1 + eps, 50.0, beta).Omega
          - an.renormalized_frequency(K, 1 - eps, 50.0, beta).Omega) / (2 * eps)
    assert d == pytest.approx(fd, rel=1e-6)


def test_steady_state_weak_coupling_limit():
    sz, rho_e = an.steady_sigma_z(1e-6, 1.0, 50.0, 1.0)
    assert sz == pytest.approx(math.tanh(0.5), rel=1e-4)
    assert rho_e == pytest.approx(0.5 * (1 - sz))
    assert an.steady_sigma_z(0.0, 1.0, 50.0, 2.0)[0] == pytest.approx(math.tanh(1.0), rel=1e-14)


def test_low_temperature_formula():
    assert an.steady_excited_lowT(0.1, 1.0, 50.0) == pytest.approx(0.1 / (2 * math.pi) * (-1 - np.euler_gamma + math.log(50)))
    assert an.steady_excited_lowT(0.0, 1.0, 50.0) == 0.0
    with pytest.raises(ValueError):
        an.steady_excited_lowT(0.1, 1.0, 1.5)
    rho = an.steady_sigma_z(0.05 / math.pi, 1.0, 50.0, 10.0)[1]
    assert rho == pytest.approx(an.steady_excited_lowT(0.05, 1.0, 50.0), rel=0.1)


@pytest.mark.parametrize("kappa", [0.02, 0.05])
def test_low_temperature_formula_is_limit_of_exact(kappa):
    rho = an.steady_sigma_z(kappa / math.pi, 1.0, 50.0, 20.0)[1]
    assert rho == pytest.approx(an.steady_excited_lowT(kappa, 1.0, 50.0), rel=0.1)


def test_lamb_shift():
    assert an.lamb_shift_perturbative(0.0, 1.0, 50.0) == 1.0
    K0 = an.lamb_shift_zero_crossing(1.0, 50.0)
    assert K0 == pytest.approx(1 / (math.log(50) - an.EULER_GAMMA), abs=1e-10)
    for K in (0.01, 0.03, 0.05):
        Om = an.renormalized_frequency(K, 1.0, 50.0, math.inf).Omega
        assert abs(an.lamb_shift_perturbative(K, 1.0, 50.0) - Om) / Om < 0.02
    assert an.lamb_shift_harmonic(0.1, 1.0, 1e12) == pytest.approx(1.0, abs=1e-12)
    assert an.lamb_shift_harmonic(0.1, 1.0, 50.0) > 1.0


def test_chi_gap_shrinks_with_cutoff():
    gaps = []
    for wc in (50.0, 200.0, 1000.0):
        b = BathSpec(0.1, wc, 1.0)
        gaps.append(abs(an.entanglement_chi(b) / an.entanglement_chi_closed(b) - 1))
    assert gaps[0] > gaps[1] > gaps[2]
    assert an.entanglement_chi(BathSpec(0.0, 50.0, 1.0)) == 0.0
    assert an.entanglement_chi_closed(BathSpec(0.1, 50.0, 1.0)) == pytest.approx(0.0384, abs=5e-5)


def test_chi_quadrature_matches_mpmath():
    b = BathSpec(0.1, 50.0, 1.0)
    f = lambda w: 0.1 * w / (1 + (w / 50) ** 2) ** 2 / (1 + w) ** 2  # noqa: E731
    ref = mpmath.quad(f, [0, 1, 50, mpmath.inf]) / (2 * mpmath.pi)
    assert an.entanglement_chi(b) == pytest.approx(float(ref), rel=1e-9)


def test_two_bath_occupation():
    assert an.two_bath_occupation(1.0, 0.0, 1.0, 0.2) == pytest.approx(0.1)
    assert an.two_bath_occupation(1.0, 0.3, 0.0, 0.9) == pytest.approx(0.3)
    assert an.two_bath_occupation(100.0, 0.01, 1.0, 0.5) == pytest.approx(0.01485, abs=1e-5)
    with pytest.raises(ZeroDivisionError):
        an.two_bath_occupation(0.0, 0.1, 0.0, 0.1)


def test_quadrature_error_type_is_runtime_error():
    assert issubclass(QuadratureError, RuntimeError)
