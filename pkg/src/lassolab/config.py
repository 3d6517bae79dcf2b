"""JSON experiment configs: one file per CLI subcommand, versioned, strict keys."""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .experiments import EquivalenceConfig, SweepConfig, UnboundedConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class WidthConfig:
    p: int
    k: int
    n: int | None = None
    covariance: dict = dataclasses.field(default_factory=lambda: {"kind": "identity"})
    samples: int = 2000
    seed: int = 0
    repeats: int = 1


@dataclasses.dataclass
class FitConfig:
    n: int
    p: int
    k: int
    lam: float = 0.5
    sigma: float = 1.0
    amplitude: float = 1.0
    covariance: dict = dataclasses.field(default_factory=lambda: {"kind": "identity"})
    seed: int = 0
    replications: int = 1
    tol: float = 1e-9
    problem_file: str | None = None


@dataclasses.dataclass
class DiagnoseConfig(FitConfig):
    mu: float | None = None
    check_opnorm: bool = True


SCHEMAS = {
    "sweep": SweepConfig,
    "equivalence": EquivalenceConfig,
    "unbounded": UnboundedConfig,
    "width": WidthConfig,
    "fit": FitConfig,
    "diagnose": DiagnoseConfig,
}


def parse_config(kind: str, data: dict):
    if kind not in SCHEMAS:
        raise ConfigError(f"unknown config kind {kind!r}")
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    version = data.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    cls = SCHEMAS[kind]
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown keys for {kind}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {kind} config: {exc}") from exc


def load_config(kind: str, path) -> object:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(kind, data)


def dump_config(cfg) -> dict:
    d = dataclasses.asdict(cfg)
    d["schema_version"] = SCHEMA_VERSION
    return d
