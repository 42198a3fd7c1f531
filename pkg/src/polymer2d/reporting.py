"""CSV and manifest emission.

One CSV per experiment with the fixed schema
(experiment, N, statistic, estimate, stderr, target, gate); reals are
written with repr-17g, no locale, so reruns with the same seed are
byte-identical for any worker count.  The JSON manifest carries the config
echo, seed, versions and wall times; it is written atomically at run end,
and a marker file flags partially-written runs.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict

from .config import ExperimentConfig, config_hash, emit_config
from .experiments import ExperimentReport

CSV_HEADER = "experiment,N,statistic,estimate,stderr,target,gate"
MARKER_NAME = "INCOMPLETE"
MANIFEST_NAME = "manifest.json"


def report_csv_text(report: ExperimentReport) -> str:
    lines = [CSV_HEADER]
    lines.extend(row.as_csv() for row in report.rows)
    return "\n".join(lines) + "\n"


def write_report_csv(report: ExperimentReport, out_dir: str) -> str:
    path = os.path.join(out_dir, f"{report.name}.csv")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(report_csv_text(report))
    return path


def report_json(report: ExperimentReport) -> dict:
    return {
        "name": report.name,
        "passed": report.passed,
        "runtimes_seconds": {str(k): v for k, v in report.runtimes.items()},
        "rows": [asdict(r) for r in report.rows],
    }


def write_marker(out_dir: str) -> None:
    with open(os.path.join(out_dir, MARKER_NAME), "w", encoding="ascii") as fh:
        fh.write("run in progress or aborted\n")


def clear_marker(out_dir: str) -> None:
    path = os.path.join(out_dir, MARKER_NAME)
    if os.path.exists(path):
        os.remove(path)


def versions() -> dict[str, str]:
    import numba
    import numpy
    import scipy

    from . import __version__

    return {
        "polymer2d": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def write_manifest(
    out_dir: str,
    cfg: ExperimentConfig,
    reports: list[ExperimentReport],
    started_at: str,
    finished_at: str,
    wall_seconds: float,
    csv_paths: dict[str, str],
) -> str:
    manifest = {
        "config": emit_config(cfg),
        "config_hash": config_hash(cfg),
        "master_seed": cfg.seed,
        "versions": versions(),
        "started_at": started_at,
        "finished_at": finished_at,
        "wall_seconds": wall_seconds,
        "outputs": csv_paths,
        "all_gates_passed": all(r.passed for r in reports),
        "experiments": {r.name: report_json(r) for r in reports},
    }
    path = os.path.join(out_dir, MANIFEST_NAME)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path
