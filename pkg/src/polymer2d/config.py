"""Flat key=value experiment configuration with typed parsing and defaults.

The file format is one `key = value` pair per line, `#` comments, lists
comma-separated.  Unknown keys are rejected; a minimal file needs only
`law`, `beta_hat` and `seed`.  `emit_config` produces a canonical text that
reparses to an equal config (round-trip), and whose SHA-256 identifies the
run in the manifest.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields

from .disorder import LAWS

_LADDER_DEFAULT = (256, 1024, 4096)


@dataclass(frozen=True)
class ExperimentConfig:
    law: str
    beta_hat: float
    seed: int
    n_ladder: tuple[int, ...] = _LADDER_DEFAULT
    replicas: tuple[int, ...] = (10_000,)
    heavy_replicas: tuple[int, ...] = (1_000,)
    paths_per_replica: int = 8
    gamma: float = 0.5
    delta: float = 0.5
    alpha: float = 0.25
    zeta_grid: tuple[float, ...] = (0.2, 0.5, 0.8, 1.0)
    ball_time: float = 0.5
    ball_center: tuple[float, ...] = (0.0, 0.0)
    ball_radius: float = 0.5
    llt_point: tuple[float, ...] = (0.5, 0.5)
    fact_point: tuple[float, ...] = (0.5, 0.5)
    fact_s_plus: float = 1.0 / 3.0
    fact_t_minus: float = 2.0 / 3.0
    modulus_deltas: tuple[float, ...] = (0.05, 0.1, 0.2)
    truncation_c: float = 3.0
    checkpoint_stride: int = 0
    out_dir: str = "out"
    workers: int = 1
    experiments: str = "all"

    @property
    def truncation(self) -> float | None:
        return self.truncation_c if self.truncation_c > 0 else None

    def replicas_for(self, n: int) -> int:
        return _broadcast(self.replicas, self.n_ladder)[self.n_ladder.index(n)]

    def heavy_replicas_for(self, n: int) -> int:
        return _broadcast(self.heavy_replicas, self.n_ladder)[self.n_ladder.index(n)]


class ConfigError(ValueError):
    pass


_REQUIRED = ("law", "beta_hat", "seed")

_SCHEMA: dict[str, str] = {
    "law": "str",
    "beta_hat": "float",
    "seed": "int",
    "n_ladder": "int_list",
    "replicas": "int_list",
    "heavy_replicas": "int_list",
    "paths_per_replica": "int",
    "gamma": "float",
    "delta": "float",
    "alpha": "float",
    "zeta_grid": "float_list",
    "ball_time": "float",
    "ball_center": "float_list",
    "ball_radius": "float",
    "llt_point": "float_list",
    "fact_point": "float_list",
    "fact_s_plus": "float",
    "fact_t_minus": "float",
    "modulus_deltas": "float_list",
    "truncation_c": "float",
    "checkpoint_stride": "int",
    "out_dir": "str",
    "workers": "int",
    "experiments": "str",
}


def _broadcast(values: tuple, ladder: tuple) -> tuple:
    if len(values) == 1:
        return values * len(ladder)
    if len(values) != len(ladder):
        raise ConfigError(
            f"need one value or one per ladder entry, got {len(values)} for {len(ladder)} sizes"
        )
    return values


def _convert(key: str, raw: str):
    kind = _SCHEMA[key]
    try:
        if kind == "str":
            return raw
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if kind == "int_list":
            return tuple(int(s) for s in items)
        return tuple(float(s) for s in items)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def parse_config_text(text: str) -> ExperimentConfig:
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    cfg = ExperimentConfig(**values)  # type: ignore[arg-type]
    validate_config(cfg)
    return cfg


def parse_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="ascii") as fh:
        return parse_config_text(fh.read())


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.law not in LAWS:
        raise ConfigError(f"law must be one of {LAWS}, got {cfg.law!r}")
    if not 0.0 < cfg.beta_hat < 1.0:
        raise ConfigError("beta_hat must lie in the subcritical window (0, 1)")
    if len(cfg.n_ladder) < 1 or any(n < 2 for n in cfg.n_ladder):
        raise ConfigError("n_ladder needs sizes >= 2")
    if any(a >= b for a, b in zip(cfg.n_ladder, cfg.n_ladder[1:])):
        raise ConfigError("n_ladder must be strictly increasing")
    for name in ("replicas", "heavy_replicas"):
        vals = _broadcast(getattr(cfg, name), cfg.n_ladder)
        if any(r < 100 for r in vals):
            raise ConfigError(f"{name} must be >= 100 (statistical gates need replicas)")
    if not 0.0 < cfg.gamma < 1.0:
        raise ConfigError("gamma must lie in (0, 1)")
    if not 0.0 < cfg.delta <= 1.0:
        raise ConfigError("delta must lie in (0, 1]")
    if any(not 0.0 < z <= 1.0 for z in cfg.zeta_grid):
        raise ConfigError("zeta_grid entries must lie in (0, 1]")
    if not 0.0 < cfg.fact_s_plus < cfg.fact_t_minus < 1.0:
        raise ConfigError("need 0 < fact_s_plus < fact_t_minus < 1")
    if not 0.0 < cfg.ball_time <= 1.0:
        raise ConfigError("ball_time must lie in (0, 1]")
    if cfg.ball_radius <= 0.0:
        raise ConfigError("ball_radius must be positive")
    if len(cfg.ball_center) != 2 or len(cfg.llt_point) != 2 or len(cfg.fact_point) != 2:
        raise ConfigError("points must have two coordinates")
    if any(not 0.0 < d <= 1.0 for d in cfg.modulus_deltas):
        raise ConfigError("modulus_deltas must lie in (0, 1]")
    if cfg.paths_per_replica < 1:
        raise ConfigError("paths_per_replica must be positive")
    if cfg.checkpoint_stride < 0:
        raise ConfigError("checkpoint_stride must be non-negative (0 = auto)")
    if cfg.workers < 1:
        raise ConfigError("workers must be positive")


def _format_value(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        lines.append(f"{f.name} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(emit_config(cfg).encode("ascii")).hexdigest()
