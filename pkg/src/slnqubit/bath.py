"""Bath-side scalar functions for an ohmic reservoir with a high-frequency cutoff.

Two-sided conventions live here: the spectral density is extended as an odd
function of frequency, the power spectrum is ``S(w) = J(w) [n(w) + 1]`` on the
whole axis, and ``L(t) = int dw/2pi S(w) exp(-i w t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "BathSpec",
    "IntrinsicBathSpec",
    "QuadratureError",
    "spectral_density",
    "bose_occupation",
    "power_spectrum",
    "correlation_function",
    "sled_noise_spectrum",
    "response_spectrum",
    "kondo_parameter",
]

CUTOFF_FAMILIES = ("drude2", "exponential")


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class BathSpec:
    """Ohmic bath.

    ``beta`` stores hbar*beta in units of time; ``math.inf`` is zero temperature.
    ``kappa`` is the zero-temperature Born-Markov decay rate at ``omega_q_ref``.
    """

    kappa: float
    omega_c: float
    beta: float
    omega_q_ref: float = 1.0
    cutoff_family: str = "drude2"

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.omega_c <= 0 or self.beta <= 0 or self.omega_q_ref <= 0:
            raise ValueError("omega_c, beta and omega_q_ref must be positive")
        if self.cutoff_family not in CUTOFF_FAMILIES:
            raise ValueError(f"cutoff_family must be one of {CUTOFF_FAMILIES}")

    @property
    def eta(self) -> float:
        """Low-frequency slope of J, i.e. kappa / omega_q_ref."""
        return self.kappa / self.omega_q_ref

    @property
    def kappa_T(self) -> float:
        """Thermally enhanced weak-coupling decay rate kappa * coth(beta*omega_q/2)."""
        if math.isinf(self.beta):
            return self.kappa
        return self.kappa / math.tanh(0.5 * self.beta * self.omega_q_ref)

    def with_kappa(self, kappa: float) -> "BathSpec":
        return BathSpec(kappa, self.omega_c, self.beta, self.omega_q_ref, self.cutoff_family)


@dataclass(frozen=True)
class IntrinsicBathSpec:
    gamma: float
    N_i: float

    def __post_init__(self):
        if self.gamma < 0 or self.N_i < 0:
            raise ValueError("gamma and N_i must be non-negative")


def _cutoff(b: BathSpec, w):
    x = w / b.omega_c
    if b.cutoff_family == "drude2":
        return 1.0 / (1.0 + x * x) ** 2
    return np.exp(-x)


def spectral_density(b: BathSpec, omega):
    """J(w) for w >= 0."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral_density is defined for w >= 0; use the odd extension explicitly")
    out = b.eta * w * _cutoff(b, w)
    return out if out.ndim else float(out)


def _j_odd(b: BathSpec, w):
    w = np.asarray(w, dtype=float)
    return b.eta * w * _cutoff(b, np.abs(w))


def _j_over_w(b: BathSpec, w):
    """J(|w|)/|w|, finite at w = 0."""
    return b.eta * _cutoff(b, np.abs(np.asarray(w, dtype=float)))


def bose_occupation(beta: float, omega):
    """1/(exp(beta w) - 1), continued to w < 0 as -(1 + n(|w|))."""
    w = np.asarray(omega, dtype=float)
    if np.any(w == 0):
        raise ValueError("Bose occupation diverges at w = 0")
    if math.isinf(beta):
        out = np.where(w > 0, 0.0, -1.0)
    else:
        with np.errstate(over="ignore"):
            n_abs = 1.0 / np.expm1(beta * np.abs(w))
        out = np.where(w > 0, n_abs, -(1.0 + n_abs))
    return out if out.ndim else float(out)


def _coth_half(beta: float, w):
    """coth(beta |w| / 2) for |w| > 0, vectorized; 1 at zero temperature."""
    w = np.abs(np.asarray(w, dtype=float))
    if math.isinf(beta):
        return np.ones_like(w)
    with np.errstate(divide="ignore"):
        return 1.0 / np.tanh(0.5 * beta * w)


def power_spectrum(b: BathSpec, omega):
    """Two-sided S(w) = J(w)[n(w) + 1] with odd J; the w -> 0 limit is kappa/(beta omega_q)."""
    w = np.asarray(omega, dtype=float)
    out = np.empty_like(w)
    zero = w == 0
    nz = ~zero
    if math.isinf(b.beta):
        out[nz] = np.where(w[nz] > 0, _j_odd(b, w[nz]), 0.0)
        out[zero] = 0.0
    else:
        # J(w)(n+1) = (J(|w|)/2) [coth(beta|w|/2) + sign(w)]
        ja = _j_odd(b, np.abs(w[nz]))
        out[nz] = 0.5 * ja * (_coth_half(b.beta, w[nz]) + np.sign(w[nz]))
        out[zero] = b.eta / b.beta
    return out if out.ndim else float(out)


def _coth_minus_classical(x):
    """coth(x/2) - 2/x for x >= 0, stable near x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-2
    xs = x[small]
    out[small] = xs / 6.0 - xs**3 / 360.0 + xs**5 / 15120.0
    xl = x[~small]
    out[~small] = 1.0 / np.tanh(0.5 * xl) - 2.0 / xl
    return out


def sled_noise_spectrum(b: BathSpec, omega):
    """J(|w|)[coth(beta|w|/2) - 2/(beta|w|)]: the colored part of Re L left after
    removing the classical white-noise component."""
    w = np.abs(np.asarray(omega, dtype=float))
    ja = _j_odd(b, w)
    if math.isinf(b.beta):
        out = ja
    else:
        out = ja * _coth_minus_classical(b.beta * w)
    return out if out.ndim else float(out)


def response_spectrum(b: BathSpec, omega):
    """Fourier transform of the retarded response -Theta(t) Im L(t).

    Its imaginary part is J(w)/4 (odd J). The real part has a closed form for the
    Drude cutoff; for the exponential cutoff it is obtained as a principal value.
    """
    w = np.asarray(omega, dtype=float)
    imag = 0.25 * _j_odd(b, w)
    if b.cutoff_family == "drude2":
        x2 = (w / b.omega_c) ** 2
        real = b.eta * b.omega_c / 8.0 * (1.0 - x2) / (1.0 + x2) ** 2
    else:
        real = np.vectorize(lambda v: _response_real_pv(b, v))(w)
    out = real + 1j * imag
    return out if out.ndim else complex(out)


def _response_real_pv(b: BathSpec, w: float) -> float:
    # Re chi(w) = (1/2pi) P int_0^inf J(v) v / (v^2 - w^2) dv
    w = abs(w)
    if w == 0:
        val, _ = integrate.quad(lambda v: _j_over_w(b, v), 0, np.inf, epsrel=1e-11, limit=400)
        return val / (2 * math.pi)

    # J(v) v/(v^2-w^2) = [J(v) v/(v+w)] / (v-w)
    def g(v):
        return b.eta * v * v * _cutoff(b, v) / (v + w)

    upper = 2 * w + 10 * b.omega_c
    pv, _ = integrate.quad(g, 0, upper, weight="cauchy", wvar=w, epsrel=1e-11, limit=400)
    tail, _ = integrate.quad(lambda v: g(v) / (v - w), upper, np.inf, epsrel=1e-11, limit=400)
    return (pv + tail) / (2 * math.pi)


def kondo_parameter(b: BathSpec) -> float:
    return b.kappa / (math.pi * b.omega_q_ref)


def _split_points(b: BathSpec):
    pts = [b.omega_c]
    if not math.isinf(b.beta):
        pts.append(1.0 / b.beta)
    return sorted(p for p in set(pts) if p > 0)


def _quad(f, a, c, **kw):
    """scipy quad with full output; raises QuadratureError on an unreliable result."""
    res = integrate.quad(f, a, c, full_output=1, **kw)
    val, err = res[0], res[1]
    if len(res) > 3 and not np.isfinite(val):
        raise QuadratureError(res[3])
    return val, err


def _fourier_half_line(f, t: float, kind: str, pts, rtol: float, scale: float) -> float:
    """int_0^inf f(w) {cos|sin}(w t) dw with breakpoints ``pts``; QAWO on finite
    pieces, QAWF on the tail. ``scale`` is int |f| and sets the absolute tolerance."""
    upper = 40.0 * max(pts)
    edges = [0.0] + [p for p in pts if p < upper] + [upper]
    atol = rtol * scale
    total, errsum = 0.0, 0.0
    for a, c in zip(edges[:-1], edges[1:]):
        if t == 0:
            if kind == "sin":
                continue
            val, err = _quad(f, a, c, epsabs=atol, epsrel=rtol, limit=500)
        else:
            val, err = _quad(f, a, c, weight=kind, wvar=t, epsabs=atol, epsrel=rtol, limit=500)
        total += val
        errsum += err
    if t == 0:
        if kind == "cos":
            val, err = _quad(f, upper, np.inf, epsabs=atol, epsrel=rtol, limit=500)
            total += val
            errsum += err
    else:
        val, err = _quad(f, upper, np.inf, weight=kind, wvar=t, epsabs=atol, limlst=200)
        total += val
        errsum += err
    if errsum > 100 * atol:
        raise QuadratureError(f"oscillatory quadrature did not converge (t={t}, err={errsum:.2e})")
    return total


def _magnitude(f, pts) -> float:
    edges = [0.0] + list(pts) + [np.inf]
    return sum(_quad(f, a, c, epsrel=1e-6, limit=200)[0] for a, c in zip(edges[:-1], edges[1:]))


def correlation_function(b: BathSpec, t, rtol: float = 1e-9):
    """L(t) = int_0^inf dw/2pi J(w) {coth(beta w/2) cos(w t) - i sin(w t)}.

    Evaluated by adaptive quadrature split at the cutoff and thermal scales;
    valid for negative ``t`` through the symmetries Re L even, Im L odd.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(ts.shape, dtype=complex)
    if b.kappa == 0:
        out[:] = 0
        return out if np.ndim(t) else complex(out[0])
    pts = _split_points(b)

    def sym(w):
        if w == 0:
            return b.eta * (2.0 / b.beta if not math.isinf(b.beta) else 0.0)
        return float(_j_odd(b, w) * _coth_half(b.beta, w))

    def anti(w):
        return float(_j_odd(b, w))

    s_sym, s_anti = _magnitude(sym, pts), _magnitude(anti, pts)
    for i, ti in enumerate(ts):
        re = _fourier_half_line(sym, abs(ti), "cos", pts, rtol, s_sym)
        im = -math.copysign(1.0, ti) * _fourier_half_line(anti, abs(ti), "sin", pts, rtol, s_anti)
        out[i] = complex(re, im) / (2 * math.pi)
    return out if np.ndim(t) else complex(out[0])
