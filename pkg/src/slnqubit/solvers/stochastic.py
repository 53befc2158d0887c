"""Per-trajectory SLED/SLN integration and ensemble averaging.

Each step applies the first-order Magnus propagator exp(h L(t_mid)) with the
noise value of that grid cell. Trajectories are processed in fixed-size
chunks; each chunk yields partial sums that are merged in chunk order, so the
result does not depend on how chunks are spread over worker processes.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import multiprocessing

import numpy as np
from scipy.linalg import expm

from ..bath import BathSpec
from ..model import PulseSpec, SystemModel
from ..noisegen import NoiseGrid, sled_noise_batch, sln_noise_batch
from .superop import ChebyshevPropagator, SledGenerators, SlnGenerators, taylor_apply

__all__ = [
    "RunawayError",
    "EnsembleStats",
    "Trajectory",
    "sled_step",
    "sln_step",
    "evolve_with_noise",
    "run_trajectory",
    "run_ensemble",
    "default_observables",
    "NORM_BOUND",
]

NORM_BOUND = 1e3
MAX_RUNAWAY_FRACTION = 1e-3
_NOISE_BUDGET = 2**22  # complex grid points per noise sub-batch


class RunawayError(RuntimeError):
    """Too many trajectories exceeded the norm bound."""


def default_observables(n: int) -> dict:
    """rho_g, rho_e and rho_eg = <e|rho|g> as trace functionals tr(O rho)."""
    Pg = np.zeros((n, n))
    Pg[0, 0] = 1
    Pe = np.zeros((n, n))
    Pe[1, 1] = 1
    eg = np.zeros((n, n))
    eg[0, 1] = 1  # tr(|g><e| rho) = rho_eg
    return {"rho_g": Pg, "rho_e": Pe, "rho_eg": eg}


def _check_norm(rho: np.ndarray):
    if not np.all(np.isfinite(rho)) or np.max(np.abs(rho)) > NORM_BOUND:
        raise RunawayError("density matrix norm exceeded the runaway bound")


def sled_step(rho, model: SystemModel, bath: BathSpec, xi_mid: float, h: float, drive: float = 0.0):
    """One SLED step with exact exponential of the full generator."""
    g = _sled_gens(model, bath)
    G = g.L0 + xi_mid * g.L1 + drive * g.D
    out = g.to_matrix(expm(h * G) @ g.to_vector(rho))
    _check_norm(out)
    return out


def sln_step(rho, model: SystemModel, xi_mid: complex, nu_mid: complex, h: float, drive: float = 0.0):
    """One SLN step: generator -i[H,.] + i xi [q,.] + i nu {q,.}."""
    g = SlnGenerators(model)
    G = g.L0 + xi_mid * g.A + nu_mid * g.B + drive * g.D
    out = g.to_matrix(expm(h * G) @ g.to_vector(rho))
    _check_norm(out)
    return out


def evolve_with_noise(model: SystemModel, bath: BathSpec, xi, h: float, initial, method: str = "SLED",
                      nu=None):
    """Propagate one explicit noise realization with exact step exponentials.

    Returns the density matrices at t = 0, h, ..., len(xi) h.
    """
    if method == "SLED":
        g = _sled_gens(model, bath)
        mats = lambda l: g.L0 + xi[l] * g.L1  # noqa: E731
    else:
        g = SlnGenerators(model)
        mats = lambda l: g.L0 + xi[l] * g.A + nu[l] * g.B  # noqa: E731
    v = g.to_vector(initial)
    out = [v]
    for l in range(len(xi)):
        v = expm(h * mats(l)) @ v
        out.append(v)
    return g.to_matrix(np.array(out))


_GEN_CACHE: dict = {}


def _sled_gens(model: SystemModel, bath: BathSpec) -> SledGenerators:
    key = ("sled", model.omega.tobytes(), model.q.tobytes(), bath)
    if key not in _GEN_CACHE:
        _GEN_CACHE[key] = SledGenerators(model, bath)
    return _GEN_CACHE[key]


_CHEB_CACHE: dict = {}


def _chebyshev(gens: SledGenerators, key, h: float, xmax: float) -> ChebyshevPropagator:
    k = (key, h, xmax)
    if k not in _CHEB_CACHE:
        if len(_CHEB_CACHE) > 64:
            _CHEB_CACHE.clear()
        _CHEB_CACHE[k] = ChebyshevPropagator(gens.L0, gens.L1, h, xmax)
    return _CHEB_CACHE[k]


@dataclass
class _Acc:
    """Partial sums for one chunk (or a merge of chunks)."""

    s1: np.ndarray  # (n_rec, n_obs) complex
    s2r: np.ndarray
    s2i: np.ndarray
    r1: np.ndarray | None  # (n_rec, n*n) complex, vec(rho) sums
    r2r: np.ndarray | None
    r2i: np.ndarray | None
    w1: np.ndarray  # (n_windows, n_obs) complex, sums of per-trajectory window means
    w2r: np.ndarray
    w2i: np.ndarray
    count: int = 0
    runaway: int = 0

    def merge(self, other: "_Acc") -> "_Acc":
        def add(a, b):
            return None if a is None else a + b

        return _Acc(
            self.s1 + other.s1, self.s2r + other.s2r, self.s2i + other.s2i,
            add(self.r1, other.r1), add(self.r2r, other.r2r), add(self.r2i, other.r2i),
            self.w1 + other.w1, self.w2r + other.w2r, self.w2i + other.w2i,
            self.count + other.count, self.runaway + other.runaway,
        )


@dataclass
class EnsembleStats:
    """Ensemble means of trace functionals with standard errors.

    ``mean`` is complex with shape (n_times, n_obs); ``sem_re``/``sem_im`` are
    the standard errors of its real and imaginary parts. ``window_stats`` maps
    (t_a, t_b) to the mean and standard error of per-trajectory time averages.
    """

    times: np.ndarray
    names: list
    mean: np.ndarray
    sem_re: np.ndarray
    sem_im: np.ndarray
    n_samples: int
    method: str
    rho_mean: np.ndarray | None = None
    rho_sem_re: np.ndarray | None = None
    rho_sem_im: np.ndarray | None = None
    window_stats: dict = field(default_factory=dict)
    n_runaway: int = 0
    wall_time: float = 0.0
    n_steps: int = 0
    h: float = 0.0

    def index(self, name: str) -> int:
        return self.names.index(name)

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Real part of an observable and its standard error."""
        k = self.index(name)
        return self.mean[:, k].real, self.sem_re[:, k]

    @property
    def sigma_defined(self) -> bool:
        return self.n_samples >= 2


@dataclass
class Trajectory:
    times: np.ndarray
    names: list
    values: np.ndarray  # (n_times, n_obs) complex
    rho: np.ndarray | None = None


@dataclass(frozen=True)
class _Task:
    model: SystemModel
    bath: BathSpec
    grid: NoiseGrid
    method: str
    v0: np.ndarray
    obs: np.ndarray
    seeds: tuple
    n_evolve: int
    record_every: int
    record_rho: bool
    windows: tuple  # ((l_a, l_b), ...) in step indices, inclusive
    drive: PulseSpec | None


def _record_indices(n_evolve: int, every: int) -> np.ndarray:
    idx = np.arange(0, n_evolve + 1, every)
    if idx[-1] != n_evolve:
        idx = np.append(idx, n_evolve)
    return idx


def _empty_acc(task: _Task, n_obs: int, d: int) -> _Acc:
    n_rec = _record_indices(task.n_evolve, task.record_every).size
    nw = len(task.windows)
    rho = task.record_rho
    return _Acc(
        np.zeros((n_rec, n_obs), complex), np.zeros((n_rec, n_obs)), np.zeros((n_rec, n_obs)),
        np.zeros((n_rec, d), complex) if rho else None,
        np.zeros((n_rec, d)) if rho else None,
        np.zeros((n_rec, d)) if rho else None,
        np.zeros((nw, n_obs), complex), np.zeros((nw, n_obs)), np.zeros((nw, n_obs)),
    )


def _noise(task: _Task, seeds):
    M = task.grid.size
    per = max(1, _NOISE_BUDGET // M)
    parts_xi, parts_nu = [], []
    for i in range(0, len(seeds), per):
        sub = seeds[i: i + per]
        if task.method == "SLED":
            parts_xi.append(sled_noise_batch(task.bath, task.grid, sub)[:, : task.n_evolve])
        else:
            xi, nu = sln_noise_batch(task.bath, task.grid, sub)
            parts_xi.append(xi[:, : task.n_evolve])
            parts_nu.append(nu[:, : task.n_evolve])
    xi = np.concatenate(parts_xi)
    nu = np.concatenate(parts_nu) if parts_nu else None
    return xi, nu


def _drive_values(task: _Task) -> np.ndarray | None:
    if task.drive is None:
        return None
    h = task.grid.h
    t_mid = h * (np.arange(task.n_evolve) + 0.5)
    return task.drive.amplitude(t_mid) * np.cos(task.model.omega_q * t_mid)


def _integrate(task: _Task, xi, nu, mask) -> _Acc:
    """Integrate one chunk; returns sums and a boolean array of runaway trajectories."""
    method = task.method
    if method == "SLED":
        gens = _sled_gens(task.model, task.bath)
        W = task.obs  # real-basis observable matrix (d, n_obs) complex
    else:
        gens = SlnGenerators(task.model)
        W = task.obs
    B = xi.shape[0]
    v = np.tile(task.v0, (B, 1))
    keep = ~mask
    v[mask] = 0
    d = v.shape[1]
    acc = _empty_acc(task, W.shape[1], d)
    rec = _record_indices(task.n_evolve, task.record_every)
    rec_pos = {int(l): k for k, l in enumerate(rec)}
    wins = task.windows
    wsum = np.zeros((len(wins), B, W.shape[1]), complex)
    bad = np.zeros(B, bool)
    drive = _drive_values(task)
    h = task.grid.h

    def record(l, v):
        k = rec_pos.get(l)
        in_win = [j for j, (la, lb) in enumerate(wins) if la <= l <= lb]
        if k is None and not in_win:
            return
        vals = v @ W
        if k is not None:
            acc.s1[k] += vals.sum(axis=0)
            acc.s2r[k] += (vals.real**2).sum(axis=0)
            acc.s2i[k] += (vals.imag**2).sum(axis=0)
            if task.record_rho:
                vv = v.astype(complex) if method == "SLED" else v
                acc.r1[k] += vv.sum(axis=0)
                acc.r2r[k] += (vv.real**2).sum(axis=0)
                acc.r2i[k] += (vv.imag**2).sum(axis=0)
        for j in in_win:
            wsum[j] += vals

    record(0, v)
    cheb = None
    if method == "SLED" and drive is None:
        peak = float(np.max(np.abs(xi), initial=0.0))
        xmax = 2.0 ** math.ceil(math.log2(max(peak, 1.0)))
        key = (task.model.omega.tobytes(), task.model.q.tobytes(), task.bath)
        cheb = _chebyshev(gens, key, h, xmax)
    block = 256
    for l0 in range(0, task.n_evolve, block):
        l1 = min(l0 + block, task.n_evolve)
        if cheb is not None:
            T = cheb.chebyshev_values(np.ascontiguousarray(xi[:, l0:l1].T))  # (K, nb, B)
        for l in range(l0, l1):
            if cheb is not None:
                v = cheb.apply(v, T[:, l - l0])
            elif method == "SLED":
                G = gens.L0[None] + xi[:, l, None, None] * gens.L1[None]
                if drive is not None:
                    G = G + drive[l] * gens.D[None]
                v = taylor_apply(G, v, h)
            else:
                G = gens.L0[None] + xi[:, l, None, None] * gens.A[None] + nu[:, l, None, None] * gens.B[None]
                if drive is not None:
                    G = G + drive[l] * gens.D[None]
                # runaway trajectories are frozen so the step norm stays bounded
                G[bad | mask] = 0
                v = taylor_apply(G, v, h)
            record(l + 1, v)
        big = ~np.all(np.isfinite(v), axis=1) | (np.max(np.abs(v), axis=1) > NORM_BOUND)
        bad |= big & keep
        if bad.any():
            v[bad] = 0
    for j, (la, lb) in enumerate(wins):
        m = wsum[j] / (lb - la + 1)
        acc.w1[j] += m.sum(axis=0)
        acc.w2r[j] += (m.real**2).sum(axis=0)
        acc.w2i[j] += (m.imag**2).sum(axis=0)
    acc.count = int(keep.sum())
    return acc, bad


def _run_chunk(task: _Task) -> _Acc:
    xi, nu = _noise(task, list(task.seeds))
    excluded = np.zeros(len(task.seeds), bool)
    while True:
        acc, bad = _integrate(task, xi, nu, excluded)
        if not bad.any():
            break
        # rerun with runaway trajectories excluded from every time point
        excluded |= bad
    acc.runaway = int(excluded.sum())
    acc.count = int((~excluded).sum())
    return acc


def _workers(n_workers: int | None) -> int:
    if n_workers is None:
        n_workers = int(os.environ.get("SLNQUBIT_WORKERS", "1"))
    return max(1, int(n_workers))


def _prepare(model, bath, method, initial, observables):
    if method not in ("SLED", "SLN"):
        raise ValueError(f"unknown method {method!r}")
    n = model.n
    if initial is None:
        initial = np.zeros((n, n), complex)
        initial[1, 1] = 1
    initial = np.asarray(initial, complex)
    if abs(np.trace(initial) - 1) > 1e-12 or not np.allclose(initial, initial.conj().T, atol=1e-12):
        raise ValueError("initial state must have unit trace and be Hermitian")
    obs = default_observables(n) if observables is None else dict(observables)
    if method == "SLED":
        gens = _sled_gens(model, bath)
    else:
        gens = SlnGenerators(model)
    return gens.to_vector(initial), gens.observable_matrix(list(obs.values())), list(obs), gens


def _window_steps(windows, h, n_evolve):
    out = []
    for ta, tb in windows:
        la, lb = int(math.ceil(ta / h - 1e-9)), int(math.floor(tb / h + 1e-9))
        if ta < 0 or lb > n_evolve or la > lb:
            raise ValueError(f"window [{ta}, {tb}] outside the integration range")
        out.append((la, lb))
    return tuple(out)


def run_ensemble(model: SystemModel, bath: BathSpec, grid: NoiseGrid, n_samples: int, seed: int = 0,
                 method: str = "SLED", initial=None, observables: dict | None = None,
                 n_workers: int | None = None, chunk_size: int = 256, windows=(),
                 record_rho: bool = False, record_every: int = 1, n_evolve: int | None = None,
                 drive: PulseSpec | None = None, allow_runaway: bool = False) -> EnsembleStats:
    """Average ``n_samples`` trajectories with seeds ``seed, seed+1, ...``.

    ``windows`` lists (t_a, t_b) intervals whose per-trajectory time averages
    are accumulated, giving exact standard errors for steady-state estimates.
    ``n_evolve`` (default ``grid.n_steps``) limits how many steps are
    integrated while the noise is still synthesized on the full grid.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    n_evolve = grid.n_steps if n_evolve is None else int(n_evolve)
    if not 1 <= n_evolve <= grid.n_steps:
        raise ValueError("n_evolve must lie in [1, n_steps]")
    v0, W, names, gens = _prepare(model, bath, method, initial, observables)
    win_steps = _window_steps(windows, grid.h, n_evolve)
    seeds = [seed + i for i in range(n_samples)]
    tasks = [
        _Task(model, bath, grid, method, v0, W, tuple(seeds[i: i + chunk_size]), n_evolve,
              record_every, record_rho, win_steps, drive)
        for i in range(0, n_samples, chunk_size)
    ]
    t0 = time.perf_counter()
    nw = _workers(n_workers)
    if nw == 1 or len(tasks) == 1:
        results = [_run_chunk(t) for t in tasks]
    else:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=nw, mp_context=ctx) as pool:
            results = list(pool.map(_run_chunk, tasks))
    acc = results[0]
    for r in results[1:]:
        acc = acc.merge(r)
    wall = time.perf_counter() - t0
    if acc.runaway > MAX_RUNAWAY_FRACTION * n_samples and not allow_runaway:
        raise RunawayError(f"{acc.runaway} of {n_samples} trajectories exceeded the norm bound")
    stats = _finalize(acc, gens, names, grid.h, n_evolve, record_every, win_steps, windows, method)
    stats.wall_time = wall
    return stats


def _moments(s1, s2r, s2i, n):
    mean = s1 / n
    if n < 2:
        nan = np.full(mean.shape, np.nan)
        return mean, nan, nan
    var_r = np.clip((s2r - n * mean.real**2) / (n - 1), 0, None)
    var_i = np.clip((s2i - n * mean.imag**2) / (n - 1), 0, None)
    return mean, np.sqrt(var_r / n), np.sqrt(var_i / n)


def _finalize(acc: _Acc, gens, names, h, n_evolve, every, win_steps, windows, method) -> EnsembleStats:
    n = acc.count
    if n == 0:
        raise RunawayError("every trajectory exceeded the norm bound")
    times = h * _record_indices(n_evolve, every)
    mean, sr, si = _moments(acc.s1, acc.s2r, acc.s2i, n)
    stats = EnsembleStats(times=times, names=names, mean=mean, sem_re=sr, sem_im=si, n_samples=n,
                          method=method, n_runaway=acc.runaway, n_steps=n_evolve, h=h)
    if acc.r1 is not None:
        vm, vr, vi = _moments(acc.r1, acc.r2r, acc.r2i, n)
        if method == "SLED":
            stats.rho_mean = gens.to_matrix(vm.real)
            # each matrix element depends on a single real-basis coefficient
            # for its real part and another one for its imaginary part
            Ut = gens.basis.T
            shape = (-1, gens.n, gens.n)
            stats.rho_sem_re = np.sqrt((vr**2) @ (Ut.real**2)).reshape(shape)
            stats.rho_sem_im = np.sqrt((vr**2) @ (Ut.imag**2)).reshape(shape)
        else:
            stats.rho_mean = gens.to_matrix(vm)
            stats.rho_sem_re = gens.to_matrix(vr)
            stats.rho_sem_im = gens.to_matrix(vi)
    for j, w in enumerate(windows):
        m, wr, wi = _moments(acc.w1[j], acc.w2r[j], acc.w2i[j], n)
        stats.window_stats[tuple(float(x) for x in w)] = (m, wr, wi)
    return stats


def run_trajectory(model: SystemModel, bath: BathSpec, grid: NoiseGrid, seed: int, method: str = "SLED",
                   initial=None, observables: dict | None = None, n_evolve: int | None = None,
                   drive: PulseSpec | None = None) -> Trajectory:
    """Single trajectory; observables sampled at every step (length n_evolve + 1)."""
    n_evolve = grid.n_steps if n_evolve is None else int(n_evolve)
    v0, W, names, gens = _prepare(model, bath, method, initial, observables)
    task = _Task(model, bath, grid, method, v0, W, (seed,), n_evolve, 1, True, (), drive)
    xi, nu = _noise(task, [seed])
    acc, bad = _integrate(task, xi, nu, np.zeros(1, bool))
    if bad.any():
        raise RunawayError("trajectory exceeded the norm bound")
    rho = gens.to_matrix(acc.r1.real if method == "SLED" else acc.r1)
    return Trajectory(times=grid.h * np.arange(n_evolve + 1), names=names, values=acc.s1, rho=rho)
