"""Named experiments driven by an :class:`ExperimentConfig`.

Each runner returns an :class:`ExperimentOutput` holding CSV columns, rows
and a JSON-serializable summary. Rows produced before a failure are kept so
the caller can write a flagged partial file.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import analytics
from .bath import BathSpec
from .config import ExperimentConfig
from .model import PulseSpec, SystemModel
from .noisegen import NoiseGrid, validate_generator
from .solvers import (
    EnsembleStats,
    LindbladSpec,
    extract_steady,
    fit_damped_cosine,
    lindblad_evolve,
    lindblad_two_bath,
    run_ensemble,
    steady_window,
)

__all__ = ["ExperimentOutput", "ExperimentFailure", "run_experiment", "emit_benchmark", "RUNNERS"]


@dataclass
class ExperimentOutput:
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    ok: bool = True


class ExperimentFailure(RuntimeError):
    """A runner failed after producing some rows; ``output`` holds them."""

    def __init__(self, message: str, output: ExperimentOutput):
        super().__init__(message)
        self.output = output


def _pow2_at_least(n: int) -> int:
    return 1 << max(1, math.ceil(math.log2(max(n, 2))))


def _kondo(b: BathSpec) -> float:
    return b.kappa / (math.pi * b.omega_q_ref)


def emit_benchmark(stats: EnsembleStats, cfg: ExperimentConfig, window=None) -> dict:
    """One benchmark row: temperature, levels, samples, steady error, speed."""
    if stats.n_samples < 1:
        raise ValueError("benchmark needs at least one sample")
    b = cfg.bath.build()
    window = window or steady_window(b.kappa_T)
    try:
        _, sigma = extract_steady(stats, window)
    except ValueError:
        sigma = float("nan")
    points = stats.n_samples * stats.n_steps
    return {
        "beta": cfg.bath.beta,
        "N": int(stats.rho_mean.shape[-1]) if stats.rho_mean is not None else _levels(cfg),
        "N_S": int(stats.n_samples),
        "sigma": sigma,
        "h": stats.h,
        "method": stats.method,
        "wall_time": stats.wall_time,
        "samples_per_s": points / stats.wall_time if stats.wall_time > 0 else float("nan"),
    }


def _levels(cfg: ExperimentConfig) -> int:
    return 2 if cfg.model.kind == "ideal_qubit" else cfg.model.n_levels


def _ensemble(cfg: ExperimentConfig, model: SystemModel, bath: BathSpec, grid: NoiseGrid, **kw) -> EnsembleStats:
    s = cfg.sampling
    return run_ensemble(model, bath, grid, s.n_samples, seed=s.seed, method=cfg.method,
                        n_workers=s.workers, chunk_size=s.chunk_size, **kw)


def run_decay(cfg: ExperimentConfig) -> ExperimentOutput:
    """1 - rho_g(t) from |1><1| with universal and Lindblad overlays."""
    model, bath, grid = cfg.model.build(), cfg.bath.build(), cfg.grid.build()
    n_evolve = cfg.grid.n_evolve or grid.n_steps
    every = int(cfg.params.get("record_every", 1))
    t_univ = float(cfg.params.get("universal_tmax", 0.5))
    out = ExperimentOutput(["t", "one_minus_rho_g", "sigma", "rho_e", "sigma_e", "universal", "lindblad"])
    le = lindblad_evolve(model, LindbladSpec.from_bath(model, bath), grid.h, n_evolve)
    if cfg.method == "LE":
        times = le.times[::every]
        one_g = 1 - le.series("rho_g")[::every]
        rho_e, sg, se = le.series("rho_e")[::every], np.zeros(times.size), np.zeros(times.size)
        le_col = one_g
    else:
        win = steady_window(bath.kappa_T) if bath.kappa > 0 else None
        windows = (win,) if win and win[1] <= n_evolve * grid.h else ()
        stats = _ensemble(cfg, model, bath, grid, record_every=every, n_evolve=n_evolve, windows=windows)
        times = stats.times
        g, sg = stats.series("rho_g")
        rho_e, se = stats.series("rho_e")
        one_g = 1 - g
        idx = np.rint(times / grid.h).astype(int)
        le_col = 1 - le.series("rho_g")[idx]
        out.summary["n_runaway"] = stats.n_runaway
        out.summary["benchmark"] = emit_benchmark(stats, cfg, win) if windows else None
        if stats.n_runaway:
            out.summary["warning"] = f"{stats.n_runaway} runaway trajectories excluded"
    univ = np.full(times.size, np.nan)
    sel = (times > 0) & (times <= t_univ)
    if bath.kappa > 0:
        univ[times == 0] = 1.0
        univ[sel] = analytics.universal_excited_prob(bath, times[sel])
    for row in zip(times, one_g, sg, rho_e, se, univ, le_col):
        out.rows.append([float(x) for x in row])
    return out


def run_steady_sweep(cfg: ExperimentConfig) -> ExperimentOutput:
    """Steady rho_e over [9/kappa_T, 10/kappa_T] for each kappa."""
    model = cfg.model.build()
    h = cfg.grid.h
    out = ExperimentOutput(["kappa", "kappa_T", "rho_e", "sigma", "exact_eq", "lowT_eq", "lindblad",
                            "n_samples", "wall_time"])
    bench = []
    for kappa in cfg.params["kappas"]:
        bath = cfg.bath.build(float(kappa))
        win = steady_window(bath.kappa_T)
        n_evolve = math.ceil(win[1] / h - 1e-9)
        le_spec = LindbladSpec.from_bath(model, bath)
        le_rho = float(le_spec.up[1, 0] / (le_spec.up[1, 0] + le_spec.down[1, 0]))
        if cfg.method == "LE":
            rho_e, sigma, n_s, wall = le_rho, 0.0, 0, 0.0
        else:
            grid = NoiseGrid(h, _pow2_at_least(n_evolve), cfg.grid.oversample)
            try:
                stats = _ensemble(cfg, model, bath, grid, n_evolve=n_evolve, windows=(win,),
                                  record_every=n_evolve)
            except Exception as exc:
                out.summary["benchmark"] = bench
                raise ExperimentFailure(f"kappa={kappa}: {exc}", out) from exc
            rho_e, sigma = extract_steady(stats, win)
            n_s, wall = stats.n_samples, stats.wall_time
            bench.append(emit_benchmark(stats, cfg, win))
        K = _kondo(bath)
        exact = analytics.steady_sigma_z(K, 1.0, bath.omega_c, bath.beta)[1] if K < 0.5 else float("nan")
        lowT = analytics.steady_excited_lowT(bath.kappa, 1.0, bath.omega_c)
        out.rows.append([float(kappa), bath.kappa_T, rho_e, sigma, float(exact), lowT, le_rho, n_s, wall])
    out.summary["benchmark"] = bench
    return out


def run_larmor(cfg: ExperimentConfig) -> ExperimentOutput:
    """Pointer-state precession of <sigma_x> and a damped-cosine fit of its frequency."""
    model, bath, grid = cfg.model.build(), cfg.bath.build(), cfg.grid.build()
    n = model.n
    n_evolve = cfg.grid.n_evolve or grid.n_steps
    every = int(cfg.params.get("record_every", 1))
    t_start = float(cfg.params.get("fit_start", 0.0))
    psi = np.zeros(n, complex)
    psi[:2] = 1 / math.sqrt(2)
    rho0 = np.outer(psi, psi.conj())
    sx = np.zeros((n, n))
    sx[0, 1] = sx[1, 0] = 1
    obs = {"sigma_x": sx}
    extra = {}
    if cfg.method == "LE":
        res = lindblad_evolve(model, LindbladSpec.from_bath(model, bath), grid.h, n_evolve, rho0, obs)
        times, y, e = res.times[::every], res.series("sigma_x")[::every], np.zeros(res.times[::every].size)
    else:
        stats = _ensemble(cfg, model, bath, grid, initial=rho0, observables=obs, record_every=every,
                          n_evolve=n_evolve)
        times, (y, e) = stats.times, stats.series("sigma_x")
        extra["n_runaway"] = stats.n_runaway
    out = ExperimentOutput(["t", "sigma_x", "sigma"])
    out.rows = [[float(a), float(b), float(c)] for a, b, c in zip(times, y, e)]
    sel = times >= t_start
    fit = fit_damped_cosine(times[sel], y[sel], sigma=e[sel] if np.all(e[sel] > 0) else None)
    K = _kondo(bath)
    oracle = analytics.renormalized_frequency(K, 1.0, bath.omega_c, bath.beta).Omega
    out.summary = {
        "fit": {"amplitude": fit.amplitude, "frequency": fit.frequency, "frequency_err": fit.frequency_err,
                "decay": fit.decay, "decay_err": fit.decay_err, "phase": fit.phase},
        "oracle_Omega": oracle,
        "relative_deviation": fit.frequency / oracle - 1,
    }
    out.summary.update(extra)
    return out


def gate_pulse(g: float, rise_fraction: float = 0.1) -> PulseSpec:
    """Trapezoidal pi pulse with rise time rise_fraction * pi / g."""
    return PulseSpec(g=g, rise_time=rise_fraction * math.pi / g)


def gate_error(model: SystemModel, bath: BathSpec, pulse: PulseSpec, h: float, method: str = "LE",
               n_samples: int = 0, seed: int = 0, workers: int = 1, oversample: int = 2,
               chunk_size: int = 256) -> tuple[float, float]:
    """1 - rho_g after a pi pulse starting from |1>; returns (error, standard error)."""
    n_evolve = math.ceil(pulse.duration / h)
    if method == "LE":
        res = lindblad_evolve(model, LindbladSpec.from_bath(model, bath), h, n_evolve, drive=pulse)
        return float(1 - res.series("rho_g")[-1]), 0.0
    grid = NoiseGrid(h, _pow2_at_least(n_evolve), oversample)
    stats = run_ensemble(model, bath, grid, n_samples, seed=seed, method=method, n_workers=workers,
                         chunk_size=chunk_size, n_evolve=n_evolve, record_every=n_evolve, drive=pulse)
    g, sg = stats.series("rho_g")
    return float(1 - g[-1]), float(sg[-1])


def run_gate(cfg: ExperimentConfig) -> ExperimentOutput:
    """Final-state error of a pi pulse from |1> versus kappa/g."""
    model = cfg.model.build()
    p = cfg.params
    g = float(p.get("g", 0.0025))
    pulse = gate_pulse(g, float(p.get("rise_fraction", 0.1)))
    ratios = [float(r) for r in p.get("kappa_over_g", [0.1, 0.25, 0.5, 1.0, 2.0])]
    methods = list(p.get("methods", [cfg.method]))
    s = cfg.sampling
    out = ExperimentOutput(["kappa_over_g", "method", "error", "sigma"])
    for r in ratios:
        bath = cfg.bath.build(r * g)
        for m in methods:
            try:
                err, sig = gate_error(model, bath, pulse, cfg.grid.h, m, s.n_samples, s.seed, s.workers,
                                      cfg.grid.oversample, s.chunk_size)
            except Exception as exc:
                raise ExperimentFailure(f"kappa/g={r}, {m}: {exc}", out) from exc
            out.rows.append([r, m, err, sig])
    le = [(row[0], row[2]) for row in out.rows if row[1] == "LE"]
    if le:
        out.summary["lindblad_argmax_kappa_over_g"] = max(le, key=lambda x: x[1])[0]
    return out


def run_noise_validate(cfg: ExperimentConfig) -> ExperimentOutput:
    """Lag-product estimators of the generated noise against the grid targets."""
    bath, grid = cfg.bath.build(), cfg.grid.build()
    method = "SLN" if cfg.method == "SLN" else "SLED"
    z_thr = float(cfg.params.get("z_threshold", 4.0))
    t0 = time.perf_counter()
    rep = validate_generator(bath, grid, cfg.sampling.n_samples, cfg.sampling.seed,
                             int(cfg.params.get("max_lag", 64)), method, z_thr)
    out = ExperimentOutput(["quantity", "lag", "estimate", "stderr", "target", "z"])
    for row in zip(rep.names, rep.lags, rep.mean, rep.stderr, rep.target, rep.z):
        out.rows.append([row[0], int(row[1])] + [float(x) for x in row[2:]])
    out.summary = {"max_abs_z": rep.max_abs_z, "per_quantity": rep.summary(), "passed": rep.passed,
                   "wall_time": time.perf_counter() - t0}
    out.ok = rep.passed
    return out


def run_universal_check(cfg: ExperimentConfig) -> ExperimentOutput:
    """Quadrature f(t) next to its short- and long-time forms."""
    bath = cfg.bath.build()
    times = np.asarray(cfg.params.get("times", np.geomspace(1e-3, 10.0, 41).tolist()), float)
    f = np.atleast_1d(analytics.universal_f(bath, times))
    short = np.atleast_1d(analytics.universal_f_short(bath, times))
    asym = np.where(times > 0, np.atleast_1d(analytics.universal_f_asymptotic(bath, np.where(times > 0, times, 1.0))),
                    np.nan)
    phi = np.atleast_1d(analytics.universal_phi(bath, times))
    rho = np.atleast_1d(analytics.universal_excited_prob(bath, times, f))
    out = ExperimentOutput(["t", "f", "f_short", "f_asymptotic", "phi", "rho_e"])
    out.rows = [[float(x) for x in r] for r in zip(times, f, short, asym, phi, rho)]
    return out


def run_two_bath(cfg: ExperimentConfig) -> ExperimentOutput:
    """Time-stepped two-bath occupation against the rate-weighted closed form."""
    tol = float(cfg.params.get("tol", 1e-6))
    out = ExperimentOutput(["kappa", "N_ee", "gamma", "N_i", "N_closed", "N_stepped", "abs_diff"])
    worst = 0.0
    for s in cfg.params["sets"]:
        k, Ne, gm, Ni = (float(s[key]) for key in ("kappa", "N_ee", "gamma", "N_i"))
        t_end = float(s.get("t_end", 60.0 / (k + gm)))
        res = lindblad_two_bath(1.0, k, Ne, gm, Ni, np.linspace(0.0, t_end, 7))
        diff = abs(res.steady_occupation - res.closed_form)
        worst = max(worst, diff)
        out.rows.append([k, Ne, gm, Ni, res.closed_form, res.steady_occupation, diff])
    out.summary = {"max_abs_diff": worst, "tol": tol}
    out.ok = worst < tol
    return out


RUNNERS = {
    "decay": run_decay,
    "steady_sweep": run_steady_sweep,
    "larmor": run_larmor,
    "gate": run_gate,
    "noise_validate": run_noise_validate,
    "universal_check": run_universal_check,
    "two_bath": run_two_bath,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentOutput:
    return RUNNERS[cfg.experiment](cfg.validate())
