"""Command-line entry point: one subcommand per experiment, plus ``rerun``.

Every CSV starts with a single '#'-prefixed JSON line holding the fully
resolved config, a status flag and the experiment summary, so any output can
be regenerated with ``slnqubit rerun <file>``.

Exit codes: 0 success, 1 invalid config, 2 solver or validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, config_from_dict, load_config
from .experiments import ExperimentFailure, ExperimentOutput, run_experiment

__all__ = ["main", "build_parser", "write_csv", "read_header"]

log = logging.getLogger("slnqubit")

WORKERS_ENV = "SLNQUBIT_WORKERS"


def _jsonable(o):
    return o.item() if hasattr(o, "item") else str(o)


def write_csv(path, cfg: ExperimentConfig, out: ExperimentOutput, status: str, error: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {"config": cfg.to_dict(), "status": status, "summary": out.summary}
    if error:
        header["error"] = error
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("#" + json.dumps(header, sort_keys=True, default=_jsonable) + "\n")
        w = csv.writer(fh)
        w.writerow(out.columns)
        for row in out.rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return path


def read_header(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        line = fh.readline()
    if not line.startswith("#"):
        raise ConfigError(f"{path} has no JSON header")
    return json.loads(line[1:])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slnqubit", description="Stochastic Liouville qubit experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name, help=f"run the {name} experiment")
        s.add_argument("--config", required=True, help="YAML config file")
        _common(s)
    r = sub.add_parser("rerun", help="rerun from the header of a previous CSV")
    r.add_argument("source", help="CSV written by an earlier run")
    _common(r)
    return p


def _common(s):
    s.add_argument("--seed", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--out")


def _resolve(args) -> ExperimentConfig:
    if args.command == "rerun":
        cfg = config_from_dict(read_header(args.source)["config"])
    else:
        cfg = load_config(args.config)
        if cfg.experiment != args.command:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {args.command!r}")
    if args.seed is not None:
        cfg.sampling.seed = args.seed
    if args.samples is not None:
        cfg.sampling.n_samples = args.samples
    if os.environ.get(WORKERS_ENV):
        cfg.sampling.workers = int(os.environ[WORKERS_ENV])
    if args.workers is not None:
        cfg.sampling.workers = args.workers
    if args.out:
        cfg.output = args.out
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _resolve(args)
    except (ConfigError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        out = run_experiment(cfg)
    except ExperimentFailure as exc:
        path = write_csv(cfg.output, cfg, exc.output, "partial", str(exc))
        print(f"failed: {exc}; partial results in {path}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    status = "ok" if out.ok else "failed_validation"
    path = write_csv(cfg.output, cfg, out, status)
    log.info("wrote %s", path)
    print(json.dumps({"output": str(path), "status": status, "summary": out.summary}, default=_jsonable))
    return 0 if out.ok else 2


if __name__ == "__main__":
    sys.exit(main())
