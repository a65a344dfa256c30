# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Simulation study: conditional Weibull lifetimes under Weibull censoring.

X ~ U(0, 1), Y | X=x has cumulative hazard y^(1/γ_Y(x)) and C | X=x has
cumulative hazard y^(1/γ_C(x)) with γ_C = c · γ_Y. Each replication draws a
sample, estimates γ_Y(x) and the extreme quantile on a grid of x with three
estimators, and the report aggregates squared and absolute errors.

Random streams are counter based: replication r, stream s uses
``Philox(SeedSequence(seed, spawn_key=(r, s)))`` so any replication can be
regenerated on its own and the parallel schedule never changes a number.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from cwtail.core.errors import ConfigError, DegenerateTail, EmptyInput, EstimationError, InvalidLevel
from cwtail.core.kernels import KernelSpec, parse_kernel
from cwtail.core.types import CensoredSample
from cwtail.core.utils import write_frame_csv, write_json
from cwtail.survival import HazardVariant, parse_hazard_variant
from cwtail.tail import TailVariant, estimate_from_context, parse_tail_variant, prepare_conditional, weissman_quantile
from cwtail.tuning import BLOCK_SIZE, cv_bandwidth, default_grid, select_k_at

logger = logging.getLogger(__name__)

RNG_IDENTITY = (
    "numpy.random.Generator(Philox(SeedSequence(seed, spawn_key=(replication, stream)))); "
    "streams: 0=covariate, 1=lifetime uniforms, 2=censoring uniforms; observation i takes draw i"
)

STREAM_X, STREAM_U, STREAM_V = 0, 1, 2

DEFAULT_X_GRID: Tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(1, 10))
DEFAULT_ALPHA = 1.0 / 1000.0

ESTIMATORS = ("comp_y", "comp_z", "censored")
CSV_COLUMNS = ["scenario", "n", "x", "estimator", "truth", "mse", "mae", "mean", "reps_used", "reps_failed"]
RAW_COLUMNS = ["scenario", "replication", "x", "estimator", "estimate", "truth", "h", "k"]


# --- scenarios and truth ---
class CensorRelation(str, Enum):
    LIGHTER = "lt"  # γ_Y < γ_C
    EQUAL = "eq"
    HEAVIER = "gt"  # γ_Y > γ_C

    @property
    def default_ratio(self) -> float:
        return {CensorRelation.LIGHTER: 1.5, CensorRelation.EQUAL: 1.0, CensorRelation.HEAVIER: 2.0 / 3.0}[self]


_RELATION_ALIASES = {"lighter": "lt", "equal": "eq", "heavier": "gt"}


def parse_relation(name: Union[str, CensorRelation]) -> CensorRelation:
    if isinstance(name, CensorRelation):
        return name
    key = str(name or "").strip().lower()
    key = _RELATION_ALIASES.get(key, key)
    try:
        return CensorRelation(key)
    except ValueError:
        raise ConfigError(f"Escenario '{name}' no reconocido. Usa lt, eq o gt.") from None


def true_gamma(x):
    """γ_Y(x) = 0.5 (0.1 + sin πx)(1.1 - 0.5 exp(-64 (x - 0.5)²))."""
    xx = np.asarray(x, dtype=float)
    g = 0.5 * (0.1 + np.sin(np.pi * xx)) * (1.1 - 0.5 * np.exp(-64.0 * (xx - 0.5) ** 2))
    if np.ndim(x) == 0:
        return float(g)
    return g


def true_quantile(survival_level: float, x):
    p = float(survival_level)
    if not (0.0 < p < 1.0):
        raise InvalidLevel(f"El nivel debe estar en (0, 1) (p={survival_level}).")
    q = (-math.log(p)) ** np.asarray(true_gamma(x))
    if np.ndim(x) == 0:
        return float(q)
    return q


@dataclass(frozen=True)
class ScenarioSpec:
    relation: CensorRelation
    censor_ratio: float

    def __post_init__(self) -> None:
        c = float(self.censor_ratio)
        if not (c > 0 and math.isfinite(c)):
            raise ConfigError(f"Ratio de censura no válido: {self.censor_ratio}")
        expected = {CensorRelation.LIGHTER: c > 1, CensorRelation.EQUAL: c == 1, CensorRelation.HEAVIER: c < 1}
        if not expected[self.relation]:
            raise ConfigError(f"El ratio c={c:g} no es coherente con el escenario '{self.relation.value}'.")
        object.__setattr__(self, "censor_ratio", c)

    @classmethod
    def of(cls, relation: Union[str, CensorRelation], censor_ratio: Optional[float] = None) -> "ScenarioSpec":
        rel = parse_relation(relation)
        return cls(rel, rel.default_ratio if censor_ratio is None else censor_ratio)

    @property
    def name(self) -> str:
        return self.relation.value

    def gamma_y(self, x):
        return true_gamma(x)

    def gamma_c(self, x):
        return self.censor_ratio * true_gamma(x)

    def gamma_z(self, x):
        g = np.minimum(self.gamma_y(x), self.gamma_c(x))
        return float(g) if np.ndim(x) == 0 else g


def truth_table(
    x_grid: Sequence[float] = DEFAULT_X_GRID,
    survival_level: float = 1.0 - DEFAULT_ALPHA,
    scenarios: Optional[Iterable[ScenarioSpec]] = None,
) -> pd.DataFrame:
    scenarios = list(scenarios) if scenarios is not None else [ScenarioSpec.of(r) for r in CensorRelation]
    rows = []
    for sc in scenarios:
        for x in x_grid:
            rows.append(
                {
                    "scenario": sc.name,
                    "x": float(x),
                    "gamma_y": sc.gamma_y(float(x)),
                    "gamma_c": sc.gamma_c(float(x)),
                    "gamma_z": sc.gamma_z(float(x)),
                    "quantile": true_quantile(survival_level, float(x)),
                }
            )
    return pd.DataFrame(rows, columns=["scenario", "x", "gamma_y", "gamma_c", "gamma_z", "quantile"])


# --- sampling ---
def stream_generator(seed: int, replication: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(replication), int(stream)))))


def open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniforms strictly inside (0, 1) on a 2^-53 lattice."""
    return (rng.integers(0, 2**53, size=n).astype(float) + 0.5) / 2.0**53


def weibull_from_uniform(u, gamma):
    return (-np.log(np.asarray(u, dtype=float))) ** np.asarray(gamma, dtype=float)


@dataclass(frozen=True, eq=False)
class SimulatedSample:
    sample: CensoredSample
    y: np.ndarray
    c: np.ndarray

    @property
    def complete_y(self) -> CensoredSample:
        return CensoredSample.from_arrays(self.sample.x, self.y)

    @property
    def censoring_fraction(self) -> float:
        return 1.0 - self.sample.n_uncensored / self.sample.n


def gen_sample(n: int, scenario: ScenarioSpec, seed: int, replication: int = 0) -> SimulatedSample:
    if n < 1:
        raise ConfigError(f"Tamaño de muestra no válido: {n}")
    x = stream_generator(seed, replication, STREAM_X).random(n)
    u = open_uniform(stream_generator(seed, replication, STREAM_U), n)
    v = open_uniform(stream_generator(seed, replication, STREAM_V), n)
    y = weibull_from_uniform(u, scenario.gamma_y(x))
    c = weibull_from_uniform(v, scenario.gamma_c(x))
    z = np.minimum(y, c)
    delta = y <= c
    return SimulatedSample(sample=CensoredSample.from_arrays(x, z, delta), y=y, c=c)


# --- metrics ---
def error_metrics(estimates: Iterable[float], truth: float) -> Tuple[float, float]:
    e = np.asarray(list(estimates), dtype=float)
    if e.size == 0:
        raise EmptyInput("No hay estimaciones que agregar.")
    d = e - float(truth)
    return float(np.mean(d * d)), float(np.mean(np.abs(d)))


# --- configuration ---
@dataclass(frozen=True)
class McConfig:
    n: int
    reps: int
    seed: int
    x_grid: Tuple[float, ...] = DEFAULT_X_GRID
    alpha: float = DEFAULT_ALPHA
    kernel: KernelSpec = KernelSpec.ASYMMETRIC_LINEAR
    estimators: Tuple[str, ...] = ESTIMATORS
    complete_variant: TailVariant = TailVariant.COMPLETE_HAZARD
    hazard_variant: HazardVariant = HazardVariant.NEG_LOG_KM
    auto: bool = True
    h: Optional[float] = None
    k: Optional[int] = None
    grid_size: int = 20
    grid_lower_ratio: float = 1.0 / 20.0
    grid_upper_ratio: float = 2.0
    block_size: int = BLOCK_SIZE
    n_jobs: int = 1
    keep_estimates: bool = False

    def __post_init__(self) -> None:
        if int(self.n) < 10:
            raise ConfigError(f"n debe ser >= 10 (n={self.n}).")
        if int(self.reps) < 1:
            raise ConfigError(f"reps debe ser >= 1 (reps={self.reps}).")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"La semilla debe ser un entero no negativo (seed={self.seed!r}).")
        if not (0.0 < float(self.alpha) < 1.0):
            raise ConfigError(f"alpha debe estar en (0, 1) (alpha={self.alpha}).")
        grid = tuple(float(x) for x in self.x_grid)
        if not grid or any(not (0.0 <= x <= 1.0) for x in grid):
            raise ConfigError("La rejilla de x debe ser no vacía y estar contenida en [0, 1].")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown or not self.estimators:
            raise ConfigError(f"Estimadores no reconocidos: {unknown}. Usa: {', '.join(ESTIMATORS)}")
        variant = parse_tail_variant(self.complete_variant)
        if variant not in (TailVariant.COMPLETE_HAZARD, TailVariant.COMPLETE_LITERAL):
            raise ConfigError(f"Variante completa no válida: {variant.value}")
        if not self.auto:
            if self.h is None or self.k is None:
                raise ConfigError("Sin modo automático hay que fijar h y k.")
            if not float(self.h) > 0:
                raise ConfigError(f"h debe ser > 0 (h={self.h}).")
            if int(self.k) < 2:
                raise ConfigError(f"k debe ser >= 2 (k={self.k}).")
        if self.n_jobs == 0:
            raise ConfigError("n_jobs no puede ser 0.")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "reps", int(self.reps))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "x_grid", grid)
        object.__setattr__(self, "kernel", parse_kernel(self.kernel))
        object.__setattr__(self, "estimators", tuple(e for e in ESTIMATORS if e in self.estimators))
        object.__setattr__(self, "complete_variant", variant)
        object.__setattr__(self, "hazard_variant", parse_hazard_variant(self.hazard_variant))

    @property
    def survival_level(self) -> float:
        return 1.0 - float(self.alpha)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["x_grid"] = list(self.x_grid)
        d["estimators"] = list(self.estimators)
        d["kernel"] = self.kernel.value
        d["complete_variant"] = self.complete_variant.value
        d["hazard_variant"] = self.hazard_variant.value
        d["survival_level"] = self.survival_level
        d.pop("n_jobs")  # does not change any number
        return d


# --- one replication ---
@dataclass(frozen=True)
class ReplicationRecord:
    replication: int
    x: float
    estimator: str
    estimate: float
    truth: float
    h: float
    k: Optional[int]


def _estimator_input(name: str, sim: SimulatedSample, config: McConfig) -> Tuple[CensoredSample, TailVariant]:
    if name == "comp_y":
        return sim.complete_y, config.complete_variant
    if name == "comp_z":
        return sim.sample.as_complete(), config.complete_variant
    return sim.sample, TailVariant.CENSORED


def run_replication(config: McConfig, scenario: ScenarioSpec, replication: int) -> List[ReplicationRecord]:
    sim = gen_sample(config.n, scenario, config.seed, replication)
    nan = float("nan")
    p = config.survival_level

    if config.auto:
        grid = default_grid(sim.sample, config.grid_size, config.grid_lower_ratio, config.grid_upper_ratio)
        h = cv_bandwidth(sim.sample, grid, config.kernel)
    else:
        h = float(config.h)

    records: List[ReplicationRecord] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateTail)
        for x in config.x_grid:
            g_true = true_gamma(x)
            q_true = true_quantile(p, x)
            k: Optional[int]
            if config.auto:
                try:
                    k = select_k_at(sim.sample, x, h, config.kernel, config.hazard_variant, config.block_size).chosen_k
                except EstimationError as exc:
                    logger.debug("replication %d, x=%g: k selection failed (%s)", replication, x, exc)
                    k = None
            else:
                k = int(config.k)

            for name in config.estimators:
                gamma_hat = q_hat = nan
                if k is not None:
                    sample, variant = _estimator_input(name, sim, config)
                    try:
                        ctx = prepare_conditional(sample, x, h, config.kernel, variant, config.hazard_variant)
                        tail = estimate_from_context(ctx, k)
                        gamma_hat = tail.gamma_hat
                        q_hat = weissman_quantile(p, tail, alpha_input=config.alpha).q_hat
                    except EstimationError as exc:
                        logger.debug("replication %d, x=%g, %s: %s", replication, x, name, exc)
                records.append(ReplicationRecord(replication, float(x), f"gamma_{name}", gamma_hat, g_true, h, k))
                records.append(ReplicationRecord(replication, float(x), f"quantile_{name}", q_hat, q_true, h, k))
    return records


# --- report ---
@dataclass(frozen=True)
class McCell:
    scenario: str
    n: int
    x: float
    estimator: str
    truth: float
    mse: float
    mae: float
    mean: float
    reps_used: int
    reps_failed: int


@dataclass
class McReport:
    cells: List[McCell]
    config: Dict[str, Any]
    scenarios: Dict[str, float]
    rng: str = RNG_IDENTITY
    raw: Optional[pd.DataFrame] = field(default=None, repr=False)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(c) for c in self.cells], columns=CSV_COLUMNS)

    def cell(self, scenario: str, x: float, estimator: str) -> McCell:
        for c in self.cells:
            if c.scenario == scenario and c.estimator == estimator and abs(c.x - float(x)) < 1e-12:
                return c
        raise KeyError((scenario, x, estimator))

    def metadata(self) -> Dict[str, Any]:
        return {"config": self.config, "scenarios": self.scenarios, "rng": self.rng}

    def to_csv(self, path: Path) -> Path:
        return write_frame_csv(path, self.to_frame())

    def raw_to_csv(self, path: Path) -> Path:
        if self.raw is None:
            raise ConfigError("El informe no conserva las estimaciones por réplica (keep_estimates).")
        return write_frame_csv(path, self.raw)

    def to_json(self, path: Path) -> Path:
        return write_json(path, {**self.metadata(), "cells": [asdict(c) for c in self.cells]})


def _aggregate(scenario: ScenarioSpec, config: McConfig, raw: pd.DataFrame) -> List[McCell]:
    cells: List[McCell] = []
    estimator_order = [f"{kind}_{name}" for kind in ("gamma", "quantile") for name in config.estimators]
    for x in config.x_grid:
        for est in estimator_order:
            block = raw[(raw["x"] == float(x)) & (raw["estimator"] == est)].sort_values("replication", kind="stable")
            values = block["estimate"].to_numpy(dtype=float)
            ok = values[np.isfinite(values)]
            truth = float(block["truth"].iloc[0])
            if ok.size:
                mse, mae = error_metrics(ok, truth)
                mean = float(np.mean(ok))
            else:
                mse = mae = mean = float("nan")
            cells.append(
                McCell(
                    scenario=scenario.name,
                    n=config.n,
                    x=float(x),
                    estimator=est,
                    truth=truth,
                    mse=mse,
                    mae=mae,
                    mean=mean,
                    reps_used=int(ok.size),
                    reps_failed=int(values.size - ok.size),
                )
            )
    return cells


def _simulate(config: McConfig, scenario: ScenarioSpec) -> Tuple[List[McCell], pd.DataFrame]:
    logger.info("simulating scenario=%s n=%d reps=%d (n_jobs=%d)", scenario.name, config.n, config.reps, config.n_jobs)
    per_rep = Parallel(n_jobs=config.n_jobs)(
        delayed(run_replication)(config, scenario, r) for r in range(config.reps)
    )
    raw = pd.DataFrame(
        [{"scenario": scenario.name, **asdict(rec)} for recs in per_rep for rec in recs],
        columns=RAW_COLUMNS,
    )
    cells = _aggregate(scenario, config, raw)
    failed = sum(c.reps_failed for c in cells)
    if failed:
        logger.info("scenario=%s: %d failed (replication, x, estimator) cells excluded", scenario.name, failed)
    return cells, raw


def run_monte_carlo(config: McConfig, scenario: Union[ScenarioSpec, Sequence[ScenarioSpec]]) -> McReport:
    scenarios = [scenario] if isinstance(scenario, ScenarioSpec) else list(scenario)
    if not scenarios:
        raise ConfigError("No hay escenarios que simular.")
    cells: List[McCell] = []
    raws: List[pd.DataFrame] = []
    for sc in scenarios:
        c, r = _simulate(config, sc)
        cells.extend(c)
        raws.append(r)
    return McReport(
        cells=cells,
        config=config.to_dict(),
        scenarios={sc.name: sc.censor_ratio for sc in scenarios},
        raw=pd.concat(raws, ignore_index=True) if config.keep_estimates else None,
    )
