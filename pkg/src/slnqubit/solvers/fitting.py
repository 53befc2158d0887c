"""Steady-state extraction and damped-cosine fits of ensemble series."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

__all__ = ["FitError", "FitResult", "steady_window", "extract_steady", "fit_damped_cosine"]


class FitError(RuntimeError):
    """The damped-cosine fit failed or the data cannot constrain it."""


def steady_window(kappa_T: float) -> tuple[float, float]:
    """Default averaging interval [9/kappa_T, 10/kappa_T]."""
    if kappa_T <= 0:
        raise ValueError("kappa_T must be positive")
    return 9.0 / kappa_T, 10.0 / kappa_T


def _series(stats, name):
    s = stats.series(name)
    if isinstance(s, tuple):
        return np.asarray(s[0], float), np.asarray(s[1], float)
    return np.asarray(s, float), np.zeros(len(s))


def extract_steady(stats, window=None, name: str = "rho_e", kappa_T: float | None = None):
    """Time average of ``name`` over ``window`` and its standard error.

    If the ensemble accumulated per-trajectory averages over exactly this
    window, their sample error is returned. Otherwise the series is averaged
    with the trapezoid rule and the error is the window mean of the pointwise
    errors, which assumes full correlation in time and so never underestimates.
    """
    if window is None:
        if kappa_T is None:
            raise ValueError("pass a window or kappa_T")
        window = steady_window(kappa_T)
    ta, tb = (float(x) for x in window)
    times = np.asarray(stats.times, float)
    if ta < times[0] - 1e-12 or tb > times[-1] + 1e-12 or ta >= tb:
        raise ValueError(f"window [{ta:g}, {tb:g}] outside the grid [{times[0]:g}, {times[-1]:g}]")
    ws = getattr(stats, "window_stats", {}) or {}
    for (wa, wb), (mean, sem_re, _) in ws.items():
        if math.isclose(wa, ta, rel_tol=1e-12, abs_tol=1e-12) and math.isclose(wb, tb, rel_tol=1e-12, abs_tol=1e-12):
            k = stats.index(name)
            return float(mean[k].real), float(sem_re[k])
    y, e = _series(stats, name)
    inside = (times > ta) & (times < tb)
    t = np.concatenate([[ta], times[inside], [tb]])
    yy = np.concatenate([[np.interp(ta, times, y)], y[inside], [np.interp(tb, times, y)]])
    ee = np.concatenate([[np.interp(ta, times, e)], e[inside], [np.interp(tb, times, e)]])
    span = tb - ta
    return float(np.trapezoid(yy, t) / span), float(np.trapezoid(ee, t) / span)


@dataclass
class FitResult:
    amplitude: float
    frequency: float
    decay: float
    phase: float
    offset: float
    frequency_err: float
    decay_err: float
    covariance: np.ndarray


def _model(t, A, Om, G, phi, c=0.0):
    return A * np.exp(-G * t) * np.cos(Om * t + phi) + c


def _fft_guess(t, y):
    dt = t[1] - t[0]
    yc = y - y.mean()
    n = 8 * len(yc)
    # no taper: a damped signal lives at early times, which a window would suppress
    spec = np.abs(np.fft.rfft(yc, n))
    freqs = 2 * np.pi * np.fft.rfftfreq(n, dt)
    k = int(np.argmax(spec[1:])) + 1
    return float(freqs[k])


def fit_damped_cosine(t, y, sigma=None, offset: bool = False, min_oscillations: float = 3.0) -> FitResult:
    """Least-squares fit of A exp(-G t) cos(Om t + phi) (+ c if ``offset``).

    ``t`` must be uniformly spaced. The initial frequency comes from the
    periodogram peak; at least ``min_oscillations`` periods must be covered.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if t.shape != y.shape or t.size < 8:
        raise FitError("need matching t and y with at least 8 points")
    if not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-6):
        raise FitError("t must be uniformly spaced")
    span = t[-1] - t[0]
    Om0 = _fft_guess(t, y)
    if Om0 * span / (2 * np.pi) < min_oscillations:
        raise FitError(f"only {Om0 * span / (2 * np.pi):.2f} oscillations in the data")
    t0 = t[0]
    tt = t - t0
    # linear solve for A cos phi, -A sin phi at the guessed frequency
    basis = np.stack([np.cos(Om0 * tt), np.sin(Om0 * tt)], axis=1)
    a, b = np.linalg.lstsq(basis, y - (y.mean() if offset else 0.0), rcond=None)[0]
    A0, phi0 = math.hypot(a, b), math.atan2(-b, a)
    p0 = [A0, Om0, 1.0 / span, phi0] + ([float(y[-len(y) // 10:].mean())] if offset else [])
    f = _model if offset else (lambda x, A, Om, G, phi: _model(x, A, Om, G, phi))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", OptimizeWarning)
            popt, pcov = curve_fit(f, tt, y, p0=p0, sigma=sigma, absolute_sigma=sigma is not None,
                                   maxfev=20000)
    except (RuntimeError, OptimizeWarning, ValueError) as exc:
        raise FitError(f"damped-cosine fit did not converge: {exc}") from exc
    if not np.all(np.isfinite(pcov)):
        raise FitError("fit covariance is not finite")
    A, Om, G, phi = popt[:4]
    if A < 0:
        A, phi = -A, phi + np.pi
    if Om < 0:
        Om, phi = -Om, -phi
    # shift the phase back to the original time origin
    phi = (phi - Om * t0 + np.pi) % (2 * np.pi) - np.pi
    err = np.sqrt(np.diag(pcov))
    c = float(popt[4]) if offset else 0.0
    return FitResult(float(A) * math.exp(G * t0), float(Om), float(G), float(phi), c,
                     float(err[1]), float(err[2]), pcov)
