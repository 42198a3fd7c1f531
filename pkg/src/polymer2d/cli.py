"""Command-line entry point: run experiments, list them, echo configs.

Exit codes: 0 all gates pass, 1 at least one gate failed, 2 usage or
configuration error.  POLYMER2D_OUT overrides --out which overrides the
config file's out_dir.
"""

from __future__ import annotations

import argparse
import datetime
import os
import sys
import time

from .config import ConfigError, ExperimentConfig, emit_config, parse_config
from .experiments import EXPERIMENTS, run_experiment
from .reporting import (
    MANIFEST_NAME,
    clear_marker,
    write_manifest,
    write_marker,
    write_report_csv,
)

_DESCRIPTIONS = {
    "kernel-diagnostics": "deterministic random-walk kernel checks (< 1 min)",
    "moment-crosschecks": "exact chaos/two-replica identities and remainder decay",
    "lognormal-limit": "log-normal limit of the partition function",
    "covariance-vs-zeta": "partition-function covariance vs the overlap exponent",
    "factorization-decay": "point-to-point factorization into point-to-plane products",
    "invariance-principle": "diffusive path statistics and tightness",
    "polymer-llt": "local limit theorem for the mid-time marginal",
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polymer2d", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run experiments and write CSV + manifest")
    run_p.add_argument("--config", required=True, help="path to the key=value config file")
    run_p.add_argument("--out", help="output directory (config out_dir by default)")
    run_p.add_argument("--seed", type=int, help="override the master seed")
    run_p.add_argument("--workers", type=int, help="worker process count")
    run_p.add_argument(
        "--experiments",
        help="comma-separated experiment names (default: config value or all)",
    )
    run_p.add_argument("--force", action="store_true", help="overwrite existing outputs")

    sub.add_parser("list-experiments", help="list experiment names")

    pc = sub.add_parser("print-config", help="parse a config and echo the effective one")
    pc.add_argument("--config", required=True)
    return p


def _effective_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config)
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    if getattr(args, "experiments", None):
        updates["experiments"] = args.experiments
    out = os.environ.get("POLYMER2D_OUT") or getattr(args, "out", None)
    if out:
        updates["out_dir"] = out
    if updates:
        from dataclasses import replace

        cfg = replace(cfg, **updates)
    return cfg


def _selected_experiments(cfg: ExperimentConfig) -> list[str]:
    if cfg.experiments.strip() in ("", "all"):
        return list(EXPERIMENTS)
    names = [s.strip() for s in cfg.experiments.split(",") if s.strip()]
    for name in names:
        if name not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {name!r}; known: {', '.join(EXPERIMENTS)}"
            )
    return names


def cmd_run(args) -> int:
    try:
        cfg = _effective_config(args)
        names = _selected_experiments(cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    existing = [
        f
        for f in [MANIFEST_NAME] + [f"{n}.csv" for n in names]
        if os.path.exists(os.path.join(out_dir, f))
    ]
    if existing and not args.force:
        print(
            f"error: refusing to overwrite {', '.join(existing)} in {out_dir!r} "
            "(pass --force)",
            file=sys.stderr,
        )
        return 2
    write_marker(out_dir)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    t0 = time.monotonic()
    reports = []
    csv_paths = {}
    for name in names:
        print(f"[polymer2d] running {name} ...", flush=True)
        report = run_experiment(name, cfg)
        reports.append(report)
        csv_paths[name] = write_report_csv(report, out_dir)
        state = "pass" if report.passed else "FAIL"
        print(f"[polymer2d] {name}: {state} ({sum(report.runtimes.values()):.1f}s)", flush=True)
    finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
    write_manifest(
        out_dir, cfg, reports, started, finished, time.monotonic() - t0, csv_paths
    )
    clear_marker(out_dir)
    return 0 if all(r.passed for r in reports) else 1


def cmd_list() -> int:
    for name in EXPERIMENTS:
        print(f"{name:24s} {_DESCRIPTIONS.get(name, '')}")
    return 0


def cmd_print_config(args) -> int:
    try:
        cfg = _effective_config(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(emit_config(cfg))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "list-experiments":
        return cmd_list()
    if args.command == "print-config":
        return cmd_print_config(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
