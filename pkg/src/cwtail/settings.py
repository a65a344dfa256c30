# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Configuration: defaults, then the YAML file, then CWTAIL_* variables.

Command-line flags are applied on top by the CLI.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from cwtail.core.errors import ConfigError
from cwtail.core.kernels import KernelSpec, parse_kernel
from cwtail.survival import HazardVariant, parse_hazard_variant

# Do not rely on the current working directory for the config file:
# anchor the default path to the project root (works with editable installs).
BASE_DIR = Path(__file__).resolve().parents[2]
DEFAULT_CONFIG_PATH = BASE_DIR / "data" / "cwtail.yml"

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass(frozen=True)
class Settings:
    out_dir: Path = Path("out")
    n_jobs: int = 1
    log_level: str = "WARNING"
    fit_kernel: KernelSpec = KernelSpec.BIQUADRATIC
    simulate_kernel: KernelSpec = KernelSpec.ASYMMETRIC_LINEAR
    hazard_variant: HazardVariant = HazardVariant.NEG_LOG_KM
    grid_size: int = 20
    grid_lower_ratio: float = 1.0 / 20.0
    grid_upper_ratio: float = 2.0
    block_size: int = 10
    decimals: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        object.__setattr__(self, "fit_kernel", parse_kernel(self.fit_kernel))
        object.__setattr__(self, "simulate_kernel", parse_kernel(self.simulate_kernel))
        object.__setattr__(self, "hazard_variant", parse_hazard_variant(self.hazard_variant))
        level = str(self.log_level or "").strip().upper()
        if level not in _LOG_LEVELS:
            raise ConfigError(f"Nivel de log '{self.log_level}' no válido. Usa uno de: {', '.join(_LOG_LEVELS)}")
        object.__setattr__(self, "log_level", level)
        if int(self.n_jobs) == 0:
            raise ConfigError("n_jobs no puede ser 0 (usa -1 para todos los núcleos).")
        if int(self.grid_size) < 1 or int(self.block_size) < 1 or int(self.decimals) < 0:
            raise ConfigError("grid_size y block_size deben ser >= 1 y decimals >= 0.")
        if not (0 < float(self.grid_lower_ratio) < float(self.grid_upper_ratio)):
            raise ConfigError(
                f"Ratios de rejilla no válidos: {self.grid_lower_ratio}, {self.grid_upper_ratio}"
            )


def _coerce(name: str, value: Any) -> Any:
    target = {f.name: f.type for f in fields(Settings)}[name]
    try:
        if target in ("int", int):
            return int(value)
        if target in ("float", float):
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"Valor no válido para '{name}': {value!r}") from None
    return value


def _load_file(path: Path) -> Dict[str, Any]:
    if not path.exists():
        return {}
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML no válido en '{path}': {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"'{path}' debe contener un mapeo clave: valor.")
    known = {f.name for f in fields(Settings)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"Claves desconocidas en '{path}': {', '.join(map(str, unknown))}")
    return {k: _coerce(k, v) for k, v in raw.items()}


def _from_env() -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    if os.getenv("CWTAIL_OUT_DIR"):
        out["out_dir"] = Path(os.environ["CWTAIL_OUT_DIR"])
    if os.getenv("CWTAIL_N_JOBS"):
        out["n_jobs"] = _coerce("n_jobs", os.environ["CWTAIL_N_JOBS"])
    if os.getenv("CWTAIL_LOG_LEVEL"):
        out["log_level"] = os.environ["CWTAIL_LOG_LEVEL"]
    return out


def config_path() -> Path:
    return Path(os.getenv("CWTAIL_CONFIG", str(DEFAULT_CONFIG_PATH))).resolve()


def load_settings(path: Optional[Path] = None, **overrides: Any) -> Settings:
    """Build the effective settings; ``overrides`` with value None are ignored."""
    values: Dict[str, Any] = {}
    values.update(_load_file(Path(path) if path is not None else config_path()))
    values.update(_from_env())
    base = Settings(**values)
    extra = {k: v for k, v in overrides.items() if v is not None}
    return replace(base, **extra) if extra else base
