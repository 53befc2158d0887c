"""Gaussian noise realizations for the stochastic Liouville propagators.

Noise is produced by filtering white Gaussian sequences in the frequency domain
on an oversampled periodic grid of length ``M = oversample * n_steps``; only the
first ``n_steps`` points are kept so that circular wraparound stays outside the
window. Time follows the convention ``x(w) = int dt x(t) exp(i w t)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .bath import BathSpec, power_spectrum, response_spectrum, sled_noise_spectrum, _j_odd

__all__ = [
    "NoiseGrid",
    "NoiseSample",
    "NoiseReport",
    "window_w1",
    "window_w2",
    "gaussian_stream",
    "generate_sled_noise",
    "generate_sln_noise",
    "sled_noise_batch",
    "sln_noise_batch",
    "target_correlations",
    "validate_noise",
    "validate_generator",
    "lag_products",
    "excess_kurtosis",
    "dump_samples",
    "load_samples",
]


@dataclass(frozen=True)
class NoiseGrid:
    h: float
    n_steps: int
    oversample: int = 2

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.n_steps < 1 or self.n_steps & (self.n_steps - 1):
            raise ValueError("n_steps must be a power of two")
        if self.oversample < 1:
            raise ValueError("oversample must be >= 1")

    @property
    def size(self) -> int:
        """Length of the periodic synthesis grid."""
        return self.n_steps * self.oversample

    @property
    def omega(self) -> np.ndarray:
        """Angular frequencies of the synthesis grid in numpy FFT order."""
        return 2 * math.pi * np.fft.fftfreq(self.size, self.h)

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(self.n_steps)


@dataclass
class NoiseSample:
    xi: np.ndarray
    nu: np.ndarray | None
    seed: int
    grid: NoiseGrid


def window_w1(b: BathSpec, omega) -> np.ndarray:
    """W1 = [S(w) - J(w)/2]^(1/2) = [J(|w|) coth(beta|w|/2) / 2]^(1/2).

    The radicand is real and even, so the window is real and non-negative.
    """
    w = np.asarray(omega, dtype=float)
    rad = power_spectrum(b, w) - 0.5 * _j_odd(b, w)
    scale = max(float(np.max(np.abs(power_spectrum(b, w)), initial=0.0)), 1e-300)
    if np.any(rad < -1e-12 * scale):
        raise ValueError("negative W1 radicand: two-sided spectrum convention is broken")
    return np.sqrt(np.clip(rad, 0.0, None)).astype(complex)


def window_w2(b: BathSpec, omega) -> np.ndarray:
    """W2 = [chi_R(w)/2]^(1/2), principal branch.

    chi_R(-w) = conj(chi_R(w)) and the radicand never lies on the negative real
    axis for w != 0, so the principal root keeps W2(-w) = conj(W2(w)).
    """
    return np.sqrt(0.5 * np.asarray(response_spectrum(b, omega), dtype=complex))


def _sled_window(b: BathSpec, omega) -> np.ndarray:
    # two-sided spectrum of the colored real noise is half the one-sided form
    return np.sqrt(0.5 * sled_noise_spectrum(b, omega))


def _real_output(win: np.ndarray) -> np.ndarray:
    """Make a window Hermitian on the grid; the Nyquist bin keeps only |W|."""
    win = np.array(win, dtype=complex)
    M = win.size
    if M % 2 == 0:
        win[M // 2] = abs(win[M // 2])
    return win


def gaussian_stream(seed: int, n: int) -> np.ndarray:
    """Standard normals by inverse CDF from a counter-based Philox stream keyed by ``seed``."""
    bits = np.random.Philox(key=int(seed) & (2**64 - 1)).random_raw(n)
    u = ((bits >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53
    return ndtri(u)


def _filter(win: np.ndarray, x: np.ndarray, h: float) -> np.ndarray:
    """Real filtered sequence(s): int dw/2pi W(w) x(w) exp(-i w t) on the grid."""
    y = np.fft.fft(win * np.fft.ifft(x, axis=-1), axis=-1)
    return y.real / math.sqrt(h)


class _Windows:
    """Per-(bath, grid) cache of the filter multipliers."""

    def __init__(self, b: BathSpec, grid: NoiseGrid):
        om = grid.omega
        self.sled = _real_output(_sled_window(b, om))
        self.w1 = _real_output(window_w1(b, om))
        self.w2 = _real_output(window_w2(b, om))

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.sled, self.w1, self.w2):
            h.update(np.ascontiguousarray(arr, dtype="<c16").tobytes())
        return h.hexdigest()


_CACHE: dict = {}


def _windows(b: BathSpec, grid: NoiseGrid) -> _Windows:
    key = (b, grid)
    if key not in _CACHE:
        if len(_CACHE) > 16:
            _CACHE.clear()
        _CACHE[key] = _Windows(b, grid)
    return _CACHE[key]


def sled_noise_batch(b: BathSpec, grid: NoiseGrid, seeds) -> np.ndarray:
    """Real SLED noise for each seed, shape (len(seeds), n_steps)."""
    seeds = list(seeds)
    if b.kappa == 0:
        return np.zeros((len(seeds), grid.n_steps))
    M = grid.size
    x = np.stack([gaussian_stream(s, M) for s in seeds])
    y = _filter(_windows(b, grid).sled, x, grid.h)
    return y[:, : grid.n_steps]


def sln_noise_batch(b: BathSpec, grid: NoiseGrid, seeds) -> tuple[np.ndarray, np.ndarray]:
    """Complex (xi, nu) for each seed, each of shape (len(seeds), n_steps).

    xi = xi_r + xi_c with xi_r from x1 through W1 and xi_c = xi_c^R + i xi_c^I
    from x2, x3 through W2; nu reuses x3 and x2 through the time-reversed window,
    which yields <xi(t) nu(t')> = i Theta(t - t') Im L(t - t').
    """
    seeds = list(seeds)
    n, M = grid.n_steps, grid.size
    if b.kappa == 0:
        z = np.zeros((len(seeds), n), dtype=complex)
        return z, z.copy()
    win = _windows(b, grid)
    x = np.stack([gaussian_stream(s, 3 * M).reshape(3, M) for s in seeds])
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    h = grid.h
    xi_r = _filter(win.w1, x1, h)[:, :n]
    w2c = np.conj(win.w2)
    xi = xi_r + _filter(win.w2, x2, h)[:, :n] + 1j * _filter(win.w2, x3, h)[:, :n]
    nu = -_filter(w2c, x3, h)[:, :n] - 1j * _filter(w2c, x2, h)[:, :n]
    return xi, nu


def generate_sled_noise(b: BathSpec, grid: NoiseGrid, seed: int) -> NoiseSample:
    return NoiseSample(xi=sled_noise_batch(b, grid, [seed])[0], nu=None, seed=seed, grid=grid)


def generate_sln_noise(b: BathSpec, grid: NoiseGrid, seed: int) -> NoiseSample:
    xi, nu = sln_noise_batch(b, grid, [seed])
    return NoiseSample(xi=xi[0], nu=nu[0], seed=seed, grid=grid)


def _cross_target(a: np.ndarray, c: np.ndarray, grid: NoiseGrid) -> np.ndarray:
    """<y(t + tau) z(t)> for y = filter(a, x), z = filter(c, x) on the same white x,
    as a function of tau on the full periodic grid."""
    neg = c[(-np.arange(c.size)) % c.size]
    return np.fft.fft(a * neg) / (grid.size * grid.h)


def target_correlations(b: BathSpec, grid: NoiseGrid, max_lag: int) -> dict:
    """Correlations realized by the generators on this grid at lags 0..max_lag.

    These are the band-limited counterparts of the continuous-time targets
    (Re L, i Theta Im L, 0): they are the discrete Fourier sums of the same
    spectra truncated at the grid Nyquist frequency. Cross-correlations are
    given for lags -max_lag..max_lag.
    """
    win = _windows(b, grid)
    lags = np.arange(max_lag + 1)
    sym = np.concatenate([-lags[:0:-1], lags])
    sled = _cross_target(win.sled, win.sled, grid).real[lags]
    xir = _cross_target(win.w1, win.w1, grid).real[lags]
    # <xi_c nu> = i(<xi^R nu^I> + <xi^I nu^R>), both terms equal
    r_i = _cross_target(win.w2, -np.conj(win.w2), grid).real
    xinu = 2j * r_i[sym % grid.size]
    return {"lags": lags, "sym_lags": sym, "sled": sled, "xixi": xir, "xinu": xinu}


@dataclass
class NoiseReport:
    """Estimator summary: one row per (quantity, lag)."""

    names: list
    lags: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    target: np.ndarray
    z: np.ndarray
    threshold: float

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z)))

    @property
    def passed(self) -> bool:
        return self.max_abs_z < self.threshold

    def summary(self) -> dict:
        out = {}
        for name in dict.fromkeys(self.names):
            sel = np.array([n == name for n in self.names])
            out[name] = float(np.max(np.abs(self.z[sel])))
        return out


def lag_products(a: np.ndarray, c: np.ndarray, lags) -> np.ndarray:
    """Per-sample estimates of <a(t + tau) c(t)>, averaged over t; shape (samples, lags)."""
    n = a.shape[1]
    out = np.empty((a.shape[0], len(lags)), dtype=np.result_type(a, c))
    for j, tau in enumerate(lags):
        if tau >= 0:
            out[:, j] = np.mean(a[:, tau:] * c[:, : n - tau], axis=1)
        else:
            out[:, j] = np.mean(a[:, : n + tau] * c[:, -tau:], axis=1)
    return out


def _z(est: np.ndarray, target: np.ndarray):
    m = est.mean(axis=0)
    se = est.std(axis=0, ddof=1) / math.sqrt(est.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, (m - target) / se, np.where(m == target, 0.0, np.inf))
    return m, se, z


def validate_noise(samples: dict, targets: dict, z_threshold: float = 4.0) -> NoiseReport:
    """Compare sample lag-product estimators with target correlations.

    ``samples`` maps an estimator name to a pair of arrays (a, c) of shape
    (n_samples, n_steps); ``targets`` maps the same name to (lags, target). For
    complex quantities the real and imaginary parts are tested separately.
    """
    names, lags_out, means, ses, tgts, zs = [], [], [], [], [], []
    for name, (a, c) in samples.items():
        a, c = np.asarray(a), np.asarray(c)
        if a.shape[0] < 100:
            raise ValueError("validate_noise needs at least 100 samples")
        lags, target = targets[name]
        target = np.asarray(target)
        est = lag_products(a, c, lags)
        parts = [("", np.real)] if not np.iscomplexobj(est) and not np.iscomplexobj(target) else [
            (".re", np.real), (".im", np.imag)]
        for suffix, part in parts:
            m, se, z = _z(part(est), part(target))
            names += [name + suffix] * len(lags)
            lags_out.append(np.asarray(lags))
            means.append(m)
            ses.append(se)
            tgts.append(part(target) * np.ones(len(lags)))
            zs.append(z)
    return NoiseReport(
        names=names,
        lags=np.concatenate(lags_out),
        mean=np.concatenate(means),
        stderr=np.concatenate(ses),
        target=np.concatenate(tgts),
        z=np.concatenate(zs),
        threshold=z_threshold,
    )


def validate_generator(b: BathSpec, grid: NoiseGrid, n_samples: int, seed: int = 0, max_lag: int = 64,
                       method: str = "SLED", z_threshold: float = 4.0) -> NoiseReport:
    """Draw ``n_samples`` realizations and test them against the grid targets.

    SLED: <xi xi> at lags 0..max_lag. SLN: <xi xi>, <xi nu> at lags
    -max_lag..max_lag (zero at negative lags by causality) and <nu nu> = 0.
    """
    tg = target_correlations(b, grid, max_lag)
    seeds = range(seed, seed + n_samples)
    if method == "SLED":
        x = sled_noise_batch(b, grid, seeds)
        return validate_noise({"sled": (x, x)}, {"sled": (tg["lags"], tg["sled"])}, z_threshold)
    if method != "SLN":
        raise ValueError(f"unknown method {method!r}")
    xi, nu = sln_noise_batch(b, grid, seeds)
    samples = {"xixi": (xi, xi), "xinu": (xi, nu), "nunu": (nu, nu)}
    targets = {
        "xixi": (tg["lags"], tg["xixi"] + 0j),
        "xinu": (tg["sym_lags"], tg["xinu"]),
        "nunu": (tg["lags"], np.zeros(tg["lags"].size, complex)),
    }
    return validate_noise(samples, targets, z_threshold)


def excess_kurtosis(x: np.ndarray) -> tuple[float, float]:
    """Sample excess kurtosis of a 1-D set of values and its standard error."""
    x = np.asarray(x, dtype=float)
    n = x.size
    d = x - x.mean()
    m2 = np.mean(d**2)
    k = float(np.mean(d**4) / m2**2 - 3.0)
    se = math.sqrt(24.0 * n * (n - 1) ** 2 / ((n - 3) * (n - 2) * (n + 3) * (n + 5)))
    return k, se


def dump_samples(path, b: BathSpec, grid: NoiseGrid, seeds, method: str = "SLED") -> Path:
    """Write samples as little-endian float64 with a JSON sidecar next to them."""
    path = Path(path)
    seeds = [int(s) for s in seeds]
    if method == "SLED":
        arrays = [sled_noise_batch(b, grid, seeds)]
        layout = ["xi"]
    elif method == "SLN":
        xi, nu = sln_noise_batch(b, grid, seeds)
        arrays = [xi.real, xi.imag, nu.real, nu.imag]
        layout = ["xi.re", "xi.im", "nu.re", "nu.im"]
    else:
        raise ValueError(f"unknown method {method!r}")
    data = np.stack(arrays, axis=1).astype("<f8")
    path.write_bytes(data.tobytes())
    meta = {
        "method": method,
        "shape": list(data.shape),
        "layout": layout,
        "dtype": "<f8",
        "seeds": seeds,
        "grid": {"h": grid.h, "n_steps": grid.n_steps, "oversample": grid.oversample},
        "bath": {"kappa": b.kappa, "omega_c": b.omega_c, "beta": b.beta,
                 "omega_q_ref": b.omega_q_ref, "cutoff_family": b.cutoff_family},
        "spectrum_sha256": _windows(b, grid).digest(),
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2))
    return path


def load_samples(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    data = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(meta["shape"])
    return data, meta
