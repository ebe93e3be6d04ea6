"""Pipeline configuration loaded from one YAML file.

Relative paths are resolved against the directory of the config file, so a
config and its data can be moved together.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import yaml

from .compressor import CompressionConfig
from .dataset import DatasetConfig
from .gateway import ModelEndpoint

BACKEND_MODES = ("replay", "live", "record")
ENDPOINT_ROLES = ("generator", "compressor", "scorer")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Paths:
    questions_in: Optional[Path] = None
    trajectories_out: Optional[Path] = None
    dataset_out: Optional[Path] = None
    eval_in: Optional[Path] = None
    reports_dir: Path = Path("reports")
    features_in: Optional[Path] = None

    def require(self, name: str) -> Path:
        p = getattr(self, name)
        if p is None:
            raise ConfigError(f"paths.{name} is not set")
        return p


@dataclass(frozen=True)
class BackendConfig:
    mode: str = "replay"
    fixtures: Optional[Path] = None

    def __post_init__(self):
        if self.mode not in BACKEND_MODES:
            raise ConfigError(f"backend.mode must be one of {BACKEND_MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class PipelineConfig:
    endpoints: dict = field(default_factory=dict)
    compression: CompressionConfig = CompressionConfig()
    dataset: DatasetConfig = DatasetConfig()
    paths: Paths = Paths()
    backend: BackendConfig = BackendConfig()
    seed: int = 0

    def endpoint(self, role: str) -> ModelEndpoint:
        ep = self.endpoints.get(role)
        if ep is None:
            raise ConfigError(f"endpoints.{role} is not configured")
        return ep


def _coerce(raw: str):
    """Parse a ``--set`` value with YAML scalar rules (so 3 -> int, true -> bool)."""
    return yaml.safe_load(raw) if raw != "" else ""


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` overrides to a nested mapping in place."""
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            nxt = node.get(p)
            if nxt is None:
                nxt = node[p] = {}
            elif not isinstance(nxt, dict):
                raise ConfigError(f"cannot set {key}: {p} is not a mapping")
            node = nxt
        node[parts[-1]] = _coerce(raw)
    return data


def _resolve(base: Path, value) -> Optional[Path]:
    if value is None:
        return None
    p = Path(os.path.expanduser(str(value)))
    return p if p.is_absolute() else base / p


def _build(cls, data, section: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{section} must be a mapping")
    known = {f.name for f in fields(cls)} | ({"reasoning_model"} if cls is CompressionConfig else set())
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")
    try:
        return cls.from_dict(data) if hasattr(cls, "from_dict") else cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{section}: {e}") from e


def config_from_dict(data: dict, base_dir=".") -> PipelineConfig:
    base = Path(base_dir)
    data = dict(data or {})
    unknown = set(data) - {"endpoints", "compression", "dataset", "paths", "backend", "seed"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")

    endpoints = {}
    for role, raw in (data.get("endpoints") or {}).items():
        if role not in ENDPOINT_ROLES:
            raise ConfigError(f"unknown endpoint role {role!r}")
        if raw is None:
            continue
        raw = dict(raw)
        raw.setdefault("name", role)
        try:
            endpoints[role] = ModelEndpoint.from_dict(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"endpoints.{role}: {e}") from e

    ds = dict(data.get("dataset") or {})
    ds.setdefault("seed", seed)  # the dataset sampler follows the global seed unless pinned

    raw_paths = dict(data.get("paths") or {})
    unknown = set(raw_paths) - {f.name for f in fields(Paths)}
    if unknown:
        raise ConfigError(f"unknown keys in paths: {sorted(unknown)}")
    paths = Paths(**{k: _resolve(base, v) for k, v in raw_paths.items()})
    if "reports_dir" not in raw_paths:
        paths = replace(paths, reports_dir=base / "reports")

    raw_backend = dict(data.get("backend") or {})
    if "fixtures" in raw_backend:
        raw_backend["fixtures"] = _resolve(base, raw_backend["fixtures"])

    return PipelineConfig(
        endpoints=endpoints,
        compression=_build(CompressionConfig, data.get("compression"), "compression"),
        dataset=_build(DatasetConfig, ds, "dataset"),
        paths=paths,
        backend=_build(BackendConfig, raw_backend, "backend"),
        seed=seed,
    )


def load_config(path, overrides=()) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    apply_overrides(data, overrides)
    return config_from_dict(data, path.parent)
