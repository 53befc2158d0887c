"""Closed-form and quadrature oracles for the ohmic spin-boson qubit.

Everything here is independent of the stochastic solvers. Units: hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .bath import BathSpec, QuadratureError, _cutoff
from .special import digamma, trigamma

__all__ = [
    "EULER_GAMMA",
    "SteadyStateParams",
    "universal_f",
    "universal_f_short",
    "universal_f_thermal",
    "universal_f_asymptotic",
    "universal_phi",
    "universal_excited_prob",
    "renormalized_frequency",
    "dOmega_domega_q",
    "steady_sigma_z",
    "steady_excited_lowT",
    "lamb_shift_perturbative",
    "lamb_shift_zero_crossing",
    "lamb_shift_harmonic",
    "entanglement_chi",
    "entanglement_chi_closed",
    "two_bath_occupation",
]

EULER_GAMMA = float(np.euler_gamma)
_PERIODS = 50


def _coth_half(beta: float, w: float) -> float:
    if math.isinf(beta):
        return 1.0
    return 1.0 / math.tanh(0.5 * beta * w)


def _check_t(t):
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ValueError("t must be non-negative")
    return ts


def _scalar_or_array(t, out):
    return out if np.ndim(t) else float(out[0])


def _periodic_points(t: float, upper: float, extra) -> list:
    stop = upper * (1 - 1e-9)  # keep rounding from creating a sliver at the end
    pts = {p for p in extra if 0 < p < stop}
    period = 2 * math.pi / t
    k = 1
    while k * period < stop:
        pts.add(k * period)
        k += 1
    return sorted(pts)


def _oscillatory(g, t: float, kind: str, b: BathSpec, rtol: float):
    """Return (int_0^U g w(w t) dw, U) with U at 50 periods, split at every period."""
    upper = _PERIODS * 2 * math.pi / t
    scales = [b.omega_c] + ([] if math.isinf(b.beta) else [1.0 / b.beta])
    pts = _periodic_points(t, upper, scales)
    res = integrate.quad(g, 0.0, upper, points=pts or None, limit=50 * (len(pts) + 2),
                         epsrel=rtol, epsabs=0.0, full_output=1)
    return res[0], res[1], upper


def _tail_bound(b: BathSpec, upper: float) -> float:
    """Upper bound on int_U^inf c(w)/w dw for the cutoff function c."""
    if upper <= 0:
        return math.inf
    if b.cutoff_family == "drude2":
        return b.omega_c**4 / (4 * upper**4)
    return b.omega_c * math.exp(-upper / b.omega_c) / upper


def _tail(f, upper: float, t: float, kind: str, b: BathSpec, rtol: float, scale: float, bound=None):
    """int_U^inf f(w) {1 | cos | sin}(w t) dw; ``kind=None`` is the plain integral.

    ``bound`` is an a-priori bound on int_U^inf |f|; a tail below the
    tolerance is dropped instead of being handed to QUADPACK.
    """
    if bound is not None and bound < 1e-2 * rtol * scale:
        return 0.0, bound
    if kind is None and upper > 10 * b.omega_c:
        # w = U/u maps the tail onto (0, 1] with a smooth integrand
        v, e = integrate.quad(lambda u: f(upper / u) * upper / (u * u) if u > 0 else 0.0,
                              0.0, 1.0, epsrel=rtol, epsabs=rtol * scale, limit=400)
        return v, e
    if kind is None:
        pts = [p for p in (b.omega_c, 10 * b.omega_c) if p > upper]
        edges = [upper] + pts + [np.inf]
        val = err = 0.0
        for a, c in zip(edges[:-1], edges[1:]):
            v, e = integrate.quad(f, a, c, epsrel=rtol, epsabs=rtol * scale, limit=400)
            val, err = val + v, err + e
        return val, err
    v, e = integrate.quad(f, upper, np.inf, weight=kind, wvar=t, epsabs=rtol * scale, limlst=200)
    return v, e


def universal_f(b: BathSpec, t, rtol: float = 1e-10):
    """f(t) = (2 omega_q/kappa) int_0^inf dw J(w)/w^2 coth(beta w/2) [1 - cos(w t)].

    Normalized by kappa, so it depends only on the cutoff and temperature.
    Integrated piecewise over the first 50 periods of the cosine, then the
    remainder is split into a plain integral and a Fourier tail.
    """
    ts = _check_t(t)
    out = np.zeros(ts.shape)

    def g_over(w):
        # 2 c(w) coth / w, the prefactor of (1 - cos)
        return 2.0 * float(_cutoff(b, w)) * _coth_half(b.beta, w) / w

    for i, ti in enumerate(ts):
        if ti == 0:
            continue

        def integrand(w, ti=ti):
            if w == 0:
                if math.isinf(b.beta):
                    return 0.0
                # coth(beta w/2)/w * (1 - cos) -> t^2 / beta as w -> 0
                return 2.0 * ti * ti / b.beta
            s = math.sin(0.5 * w * ti)
            return g_over(w) * 2.0 * s * s

        head, err_h, upper = _oscillatory(integrand, ti, "cos", b, rtol)
        scale = max(abs(head), 1e-300)
        bound = 2.0 * _coth_half(b.beta, upper) * _tail_bound(b, upper)
        plain, err_p = _tail(g_over, upper, ti, None, b, rtol, scale, bound)
        osc, err_o = _tail(g_over, upper, ti, "cos", b, rtol, scale, bound)
        val = head + plain - osc
        if err_h + err_p + err_o > 1e-6 * max(abs(val), 1e-12):
            raise QuadratureError(f"universal_f did not converge at t={ti:g}")
        out[i] = val
    return _scalar_or_array(t, out)


def universal_f_short(b: BathSpec, t):
    """Early-time form (omega_c t)^2 / 2, zero-temperature and omega_c t < 1."""
    ts = _check_t(t)
    return _scalar_or_array(t, 0.5 * (b.omega_c * ts) ** 2)


def _log_sinhc(x):
    """ln(sinh(x)/x) for x >= 0, stable for both small and large x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-3
    xs = x[small]
    out[small] = xs**2 / 6 - xs**4 / 180
    xl = x[~small]
    out[~small] = xl + np.log1p(-np.exp(-2 * xl)) - math.log(2) - np.log(xl)
    return out


def universal_f_thermal(beta: float, t):
    """Finite-temperature part 2 ln[sinh(pi t/beta) / (pi t/beta)]."""
    ts = _check_t(t)
    if math.isinf(beta):
        return _scalar_or_array(t, np.zeros(ts.shape))
    return _scalar_or_array(t, 2.0 * _log_sinhc(math.pi * ts / beta))


def universal_f_asymptotic(b: BathSpec, t):
    """Long-time form 2[gamma_E - 1/2 + ln(omega_c t)] plus the thermal part."""
    ts = _check_t(t)
    if np.any(ts == 0):
        raise ValueError("the asymptotic form diverges at t = 0")
    zero_t = 2.0 * (EULER_GAMMA - 0.5 + np.log(b.omega_c * ts))
    thermal = np.atleast_1d(universal_f_thermal(b.beta, ts))
    return _scalar_or_array(t, zero_t + thermal)


def universal_phi(b: BathSpec, t, rtol: float = 1e-10):
    """phi(t) = (2 omega_q/kappa) int_0^inf dw J(w)/w^2 [w t - sin(w t)]."""
    ts = _check_t(t)
    out = np.zeros(ts.shape)
    c = lambda w: float(_cutoff(b, w))  # noqa: E731
    total_c = _tail(c, 0.0, 0.0, None, b, rtol, 1.0)[0]
    for i, ti in enumerate(ts):
        if ti == 0:
            continue

        def sinc_part(w, ti=ti):
            return c(w) * ti * float(np.sinc(w * ti / math.pi))

        head, _, upper = _oscillatory(sinc_part, ti, "sin", b, rtol)
        tail, _ = _tail(lambda w: c(w) / w, upper, ti, "sin", b, rtol, max(head, 1e-300),
                        _tail_bound(b, upper))
        out[i] = 2.0 * (ti * total_c - head - tail)
    return _scalar_or_array(t, out)


def universal_excited_prob(b: BathSpec, t, f=None):
    """rho_e(t) = [1 + exp(-f(t) K)] / 2 for an initially excited qubit.

    ``f`` may be passed precomputed to avoid repeating the quadrature.
    """
    fv = universal_f(b, t) if f is None else np.asarray(f, dtype=float)
    K = b.kappa / (math.pi * b.omega_q_ref)
    out = 0.5 * (1.0 + np.exp(-np.asarray(fv) * K))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class SteadyStateParams:
    K: float
    G: float
    omega_eff: float
    Omega: float
    bracket: float


def _check_K(K: float):
    if not 0 <= K < 0.5:
        raise ValueError(f"K = {K:g} outside [0, 1/2)")


def _omega_eff(K, omega_q, omega_c):
    G = (special.gamma(1 - 2 * K) * math.cos(math.pi * K)) ** (1.0 / (2 * (1 - K)))
    return G, G * (omega_q / omega_c) ** (K / (1 - K)) * omega_q


def _thermal_bracket(K: float, beta: float, omega_eff: float) -> float:
    if math.isinf(beta):
        return 1.0
    y = beta * omega_eff / (2 * math.pi)
    return 1.0 + 2.0 * K * (digamma(1j * y).real - math.log(y))


def renormalized_frequency(K: float, omega_q: float, omega_c: float, beta: float) -> SteadyStateParams:
    """Bath-renormalized qubit frequency Omega from the weak-coupling partition function."""
    _check_K(K)
    G, w_eff = _omega_eff(K, omega_q, omega_c)
    br = _thermal_bracket(K, beta, w_eff)
    if br <= 0:
        raise ValueError("renormalized frequency is imaginary for these parameters")
    return SteadyStateParams(K=K, G=G, omega_eff=w_eff, Omega=w_eff * math.sqrt(br), bracket=br)


def dOmega_domega_q(K: float, omega_q: float, omega_c: float, beta: float) -> float:
    """Closed-form dOmega/domega_q at fixed K, via the chain through omega_eff."""
    p = renormalized_frequency(K, omega_q, omega_c, beta)
    w, Om = p.omega_eff, p.Omega
    if math.isinf(beta):
        dO_dw = 1.0
    else:
        y = beta * w / (2 * math.pi)
        dO_dw = Om / w - K * beta * w * w / (2 * math.pi * Om) * (trigamma(1j * y).imag + 1.0 / y)
    dw_dq = p.G ** (1 - K) / (1 - K) * (w / omega_c) ** K
    return dO_dw * dw_dq


def steady_sigma_z(K: float, omega_q: float, omega_c: float, beta: float) -> tuple[float, float]:
    """Steady <sigma_z> = tanh(beta Omega/2) dOmega/domega_q and rho_e = (1 - <sigma_z>)/2."""
    p = renormalized_frequency(K, omega_q, omega_c, beta)
    th = 1.0 if math.isinf(beta) else math.tanh(0.5 * beta * p.Omega)
    sz = th * dOmega_domega_q(K, omega_q, omega_c, beta)
    return float(sz), float(0.5 * (1.0 - sz))


def steady_excited_lowT(kappa: float, omega_q: float, omega_c: float) -> float:
    """Zero-temperature excited population from qubit-bath entanglement, first order in kappa."""
    val = kappa / (2 * math.pi * omega_q) * (-1.0 - EULER_GAMMA + math.log(omega_c / omega_q))
    if val < 0:
        raise ValueError("negative occupation: omega_c is not large enough compared to omega_q")
    return val


def _ls_constant(cutoff_family: str) -> float:
    if cutoff_family == "exponential":
        return EULER_GAMMA
    if cutoff_family == "drude2":
        return 0.5
    raise ValueError(f"unknown cutoff family {cutoff_family!r}")


def lamb_shift_perturbative(K, omega_q: float, omega_c: float, cutoff_family: str = "exponential"):
    """Second-order zero-temperature Lamb-shifted frequency of a two-level system."""
    c = _ls_constant(cutoff_family)
    out = omega_q * (1.0 - np.asarray(K, dtype=float) * (-c + math.log(omega_c / omega_q)))
    return out if np.ndim(out) else float(out)


def lamb_shift_zero_crossing(omega_q: float, omega_c: float, cutoff_family: str = "exponential",
                             xtol: float = 1e-12) -> float:
    """K at which the perturbative frequency reaches zero, located by root finding."""
    c = _ls_constant(cutoff_family)
    hi = 2.0 / (math.log(omega_c / omega_q) - c)
    if hi <= 0:
        raise ValueError("no crossing for omega_c this close to omega_q")
    return optimize.brentq(lambda k: lamb_shift_perturbative(k, omega_q, omega_c, cutoff_family),
                           0.0, hi, xtol=xtol)


def lamb_shift_harmonic(K, omega_q: float, omega_c: float):
    """Lamb-shifted frequency of a harmonic mode; the shift vanishes as omega_c grows."""
    out = omega_q * (1.0 + np.asarray(K, dtype=float) * (1.0 - EULER_GAMMA) * omega_q / omega_c)
    return out if np.ndim(out) else float(out)


def entanglement_chi(b: BathSpec, rtol: float = 1e-11) -> float:
    """chi = (1/2pi) int_0^inf J(w) / (omega_q + w)^2 dw."""
    if b.kappa == 0:
        return 0.0
    wq = b.omega_q_ref

    def f(w):
        return b.eta * w * float(_cutoff(b, w)) / (wq + w) ** 2

    edges = [0.0, wq, b.omega_c, 10 * b.omega_c, np.inf]
    edges = sorted(set(edges))
    val = sum(integrate.quad(f, a, c, epsrel=rtol, limit=400)[0] for a, c in zip(edges[:-1], edges[1:]))
    return val / (2 * math.pi)


def entanglement_chi_closed(b: BathSpec) -> float:
    """Large-cutoff Drude approximation (K/2)[-3/2 + ln(omega_c/omega_q)]."""
    K = b.kappa / (math.pi * b.omega_q_ref)
    return 0.5 * K * (-1.5 + math.log(b.omega_c / b.omega_q_ref))


def two_bath_occupation(kappa: float, N_ee: float, gamma: float, N_i: float) -> float:
    """Rate-weighted effective occupation of two baths acting on one mode."""
    if kappa + gamma == 0:
        raise ZeroDivisionError("kappa + gamma must be positive")
    return (kappa * N_ee + gamma * N_i) / (kappa + gamma)
