# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Real-data pipeline: load -> bandwidth -> k -> γ̂ -> extreme quantile."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from cwtail.core.errors import ConfigError
from cwtail.core.kernels import KernelSpec
from cwtail.core.utils import fmt
from cwtail.infra.dataset_repo import DatasetSummary, LoadedDataset, load_csv
from cwtail.settings import Settings
from cwtail.survival import HazardVariant
from cwtail.tail import (
    CONDITIONAL_VARIANTS,
    QuantileEstimate,
    TailEstimate,
    TailVariant,
    gamma_conditional,
    parse_tail_variant,
    weissman_quantile,
)
from cwtail.tuning import CvSelection, KSelectionTrace, cv_select, default_grid, select_k, per_k_estimates

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitRequest:
    input: Path
    survival_level: float
    xs: Sequence[float] = ()
    ks: Sequence[int] = ()  # empty: choose k by the block rule at each x
    h: Optional[float] = None
    uniform_weights: bool = False
    kernel: Optional[KernelSpec] = None
    variant: TailVariant = TailVariant.CENSORED
    want_traces: bool = False


@dataclass(frozen=True)
class FitRow:
    x: float
    tail: TailEstimate
    quantile: QuantileEstimate
    k_selected: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"x": self.x, "k_selected": self.k_selected, **self.tail.to_dict(), "quantile": self.quantile.to_dict()}


@dataclass
class FitResult:
    dataset: Path
    summary: DatasetSummary
    kernel: KernelSpec
    h: float
    h_source: str  # "cv", "fixed" or "uniform"
    variant: TailVariant
    hazard_variant: HazardVariant
    survival_level: float
    rows: List[FitRow] = field(default_factory=list)
    cv: Optional[CvSelection] = None
    traces: Dict[float, KSelectionTrace] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset": str(self.dataset),
            "summary": self.summary.to_dict(),
            "kernel": self.kernel.value,
            "h": self.h,
            "h_source": self.h_source,
            "variant": self.variant.value,
            "hazard_variant": self.hazard_variant.value,
            "survival_level": self.survival_level,
            "cv": None if self.cv is None else self.cv.to_frame().to_dict(orient="list"),
            "rows": [r.to_dict() for r in self.rows],
        }

    def regression_payload(self) -> Dict[str, Any]:
        """The numbers pinned by the larynx self-regression file."""
        return {
            "kernel": self.kernel.value,
            "h": self.h,
            "survival_level": self.survival_level,
            "rows": [
                {
                    "x": r.x,
                    "k": r.tail.k,
                    "gamma_hat": r.tail.gamma_hat,
                    "q_hat": r.quantile.q_hat,
                    "y_n": r.tail.y_n,
                }
                for r in self.rows
            ],
        }

    def trace_frame(self) -> pd.DataFrame:
        frames = []
        for x, trace in self.traces.items():
            df = trace.to_frame()
            df.insert(0, "x", x)
            frames.append(df)
        if not frames:
            return pd.DataFrame(columns=["x", "k", "gamma_hat", "block", "block_sd", "chosen"])
        return pd.concat(frames, ignore_index=True)

    def study_table(self, decimals: int = 4) -> pd.DataFrame:
        """Rows γ̂ and q̂ for each k, one column per evaluation point."""
        xs: List[float] = []
        for r in self.rows:
            if r.x not in xs:
                xs.append(r.x)
        blocks: Dict[str, Dict[float, str]] = {}
        for r in self.rows:
            tag = "k*" if r.k_selected else f"k={r.tail.k}"
            blocks.setdefault(f"gamma_hat ({tag})", {})[r.x] = fmt(r.tail.gamma_hat, decimals)
            blocks.setdefault(f"q_hat ({tag})", {})[r.x] = fmt(r.quantile.q_hat, decimals)
            if r.k_selected:
                blocks.setdefault("k*", {})[r.x] = str(r.tail.k)
        df = pd.DataFrame.from_dict(blocks, orient="index")
        df = df.reindex(columns=xs)
        df.columns = [fmt(x, 2) for x in xs]
        return df


def _bandwidth(ds: LoadedDataset, req: FitRequest, kernel: KernelSpec, settings: Settings):
    if req.uniform_weights:
        return KernelSpec.UNIFORM, math.inf, "uniform", None
    if req.h is not None:
        if not req.h > 0:
            raise ConfigError(f"h debe ser > 0 (h={req.h}).")
        return kernel, float(req.h), "fixed", None
    grid = default_grid(ds.sample, settings.grid_size, settings.grid_lower_ratio, settings.grid_upper_ratio)
    sel = cv_select(ds.sample, grid, kernel)
    return kernel, sel.h, "cv", sel


def run_fit(req: FitRequest, settings: Settings) -> FitResult:
    variant = parse_tail_variant(req.variant)
    if variant not in CONDITIONAL_VARIANTS:
        raise ConfigError(f"'fit' solo admite variantes condicionales, no '{variant.value}'.")
    if req.uniform_weights and req.h is not None:
        raise ConfigError("--uniform-weights y --h son incompatibles.")
    if any(int(k) < 2 for k in req.ks):
        raise ConfigError(f"Los valores de k deben ser >= 2: {list(req.ks)}")

    ds = load_csv(req.input)
    logger.info("loaded %s: n=%d, uncensored=%d", ds.path, ds.summary.n, ds.summary.uncensored)
    kernel, h, h_source, cv = _bandwidth(ds, req, req.kernel or settings.fit_kernel, settings)
    xs = [float(x) for x in (req.xs or ds.summary.points)]
    hv = settings.hazard_variant

    result = FitResult(
        dataset=ds.path,
        summary=ds.summary,
        kernel=kernel,
        h=h,
        h_source=h_source,
        variant=variant,
        hazard_variant=hv,
        survival_level=float(req.survival_level),
        cv=cv,
    )

    ks: List[Optional[int]] = [int(k) for k in req.ks] or [None]
    for x in xs:
        trace: Optional[KSelectionTrace] = None
        if ks == [None] or req.want_traces:
            trace = select_k(per_k_estimates(ds.sample, x, h, kernel, hv, variant), settings.block_size)
            result.traces[x] = trace
        for k in ks:
            k_used = trace.chosen_k if k is None else k
            tail = gamma_conditional(ds.sample, x, h, kernel, k_used, variant, hv)
            q = weissman_quantile(req.survival_level, tail, alpha_input=req.survival_level)
            result.rows.append(FitRow(x=x, tail=tail, quantile=q, k_selected=k is None))
            logger.info("x=%g k=%d: gamma=%.6g q=%.6g", x, k_used, tail.gamma_hat, q.q_hat)
    return result
