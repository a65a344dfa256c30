# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Kernel-weighted conditional survival and cumulative hazard (Beran type).

All curves are right-continuous step functions whose knots are the distinct
observed times carrying positive kernel weight at x. Tied times are grouped:
censored observations tied with an event stay in the risk set of that event,
which is the usual Kaplan-Meier convention (events before censorings).

Denominators use the left limit: 1 - H_n(s-) = weight of {Z_j >= s}, computed
as a reverse cumulative sum so the last group divides by exactly its own mass.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

import numpy as np

from cwtail.core.errors import ConfigError
from cwtail.core.kernels import KernelSpec
from cwtail.core.types import BandwidthLike, CensoredSample
from cwtail.core.weights import nw_weights

logger = logging.getLogger(__name__)


class HazardVariant(str, Enum):
    NELSON_AALEN = "nelson-aalen"
    NEG_LOG_KM = "neg-log-km"


def parse_hazard_variant(name: Union[str, HazardVariant]) -> HazardVariant:
    if isinstance(name, HazardVariant):
        return name
    key = str(name or "").strip().lower().replace("_", "-")
    try:
        return HazardVariant(key)
    except ValueError:
        allowed = ", ".join(v.value for v in HazardVariant)
        raise ConfigError(f"Variante de hazard '{name}' no reconocida. Usa una de: {allowed}") from None


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous step function: ``initial`` before the first knot."""

    knots: np.ndarray
    values: np.ndarray
    initial: float = 0.0

    def __call__(self, y):
        yy = np.asarray(y, dtype=float)
        idx = np.searchsorted(self.knots, yy, side="right") - 1
        safe = np.clip(idx, 0, max(len(self.values) - 1, 0))
        out = np.where(idx < 0, self.initial, self.values[safe] if len(self.values) else self.initial)
        if np.ndim(y) == 0:
            return float(out)
        return out

    def left_limit(self, y):
        yy = np.asarray(y, dtype=float)
        idx = np.searchsorted(self.knots, yy, side="left") - 1
        safe = np.clip(idx, 0, max(len(self.values) - 1, 0))
        out = np.where(idx < 0, self.initial, self.values[safe] if len(self.values) else self.initial)
        if np.ndim(y) == 0:
            return float(out)
        return out


@dataclass(frozen=True, eq=False)
class SubDistributions:
    Hn: StepFunction
    H1n: StepFunction


@dataclass(frozen=True, eq=False)
class HazardCurve:
    jump_times: np.ndarray
    cumulative_values: np.ndarray
    variant: HazardVariant

    def __call__(self, y):
        return StepFunction(self.jump_times, self.cumulative_values, 0.0)(y)

    @property
    def terminal_infinite(self) -> bool:
        return bool(len(self.cumulative_values)) and bool(np.isinf(self.cumulative_values[-1]))


# --- weighted building blocks ---
@dataclass(frozen=True, eq=False)
class WeightedJumps:
    """Per distinct time: total weight, event weight and weight at risk."""

    times: np.ndarray
    total: np.ndarray
    events: np.ndarray
    at_risk: np.ndarray


def group_times(z_sorted: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct values of an ascending array and the start index of each run."""
    if len(z_sorted) == 0:
        return np.empty(0), np.empty(0, dtype=int)
    starts = np.flatnonzero(np.r_[True, z_sorted[1:] != z_sorted[:-1]])
    return z_sorted[starts], starts


def weighted_jumps(z: np.ndarray, delta: np.ndarray, weights: np.ndarray) -> WeightedJumps:
    """Aggregate positive-weight observations by distinct time."""
    w = np.asarray(weights, dtype=float)
    keep = w > 0
    zk = np.asarray(z, dtype=float)[keep]
    dk = np.asarray(delta, dtype=bool)[keep]
    wk = w[keep]
    order = np.lexsort((~dk, zk))
    zs, ds, ws = zk[order], dk[order], wk[order]
    times, starts = group_times(zs)
    if len(times) == 0:
        empty = np.empty(0)
        return WeightedJumps(empty, empty, empty, empty)
    total = np.add.reduceat(ws, starts)
    events = np.add.reduceat(np.where(ds, ws, 0.0), starts)
    at_risk = np.cumsum(total[::-1])[::-1]
    return WeightedJumps(times=times, total=total, events=events, at_risk=at_risk)


def km_factors(jumps: WeightedJumps) -> np.ndarray:
    ratio = np.divide(jumps.events, jumps.at_risk, out=np.zeros_like(jumps.events), where=jumps.at_risk > 0)
    return 1.0 - np.clip(ratio, 0.0, 1.0)


def survival_from_jumps(jumps: WeightedJumps) -> StepFunction:
    return StepFunction(jumps.times, np.cumprod(km_factors(jumps)), 1.0)


def hazard_from_jumps(jumps: WeightedJumps, variant: HazardVariant) -> HazardCurve:
    variant = parse_hazard_variant(variant)
    if variant is HazardVariant.NELSON_AALEN:
        increments = np.divide(jumps.events, jumps.at_risk, out=np.zeros_like(jumps.events), where=jumps.at_risk > 0)
        values = np.cumsum(increments)
    else:
        surv = survival_from_jumps(jumps).values
        with np.errstate(divide="ignore"):
            values = -np.log(surv)
        # -log(1) may come out as -0.0
        values = np.where(values == 0.0, 0.0, values)
    return HazardCurve(jump_times=jumps.times, cumulative_values=values, variant=variant)


# --- public operations ---
def sub_distributions(sample: CensoredSample, x: float, h: BandwidthLike, kernel: KernelSpec) -> SubDistributions:
    w = nw_weights(x, sample, h, kernel)
    jumps = weighted_jumps(sample.z, sample.delta, w)
    return SubDistributions(
        Hn=StepFunction(jumps.times, np.cumsum(jumps.total), 0.0),
        H1n=StepFunction(jumps.times, np.cumsum(jumps.events), 0.0),
    )


def conditional_cum_hazard(
    sample: CensoredSample,
    x: float,
    h: BandwidthLike,
    kernel: KernelSpec,
    variant: Union[str, HazardVariant] = HazardVariant.NEG_LOG_KM,
) -> HazardCurve:
    w = nw_weights(x, sample, h, kernel)
    curve = hazard_from_jumps(weighted_jumps(sample.z, sample.delta, w), parse_hazard_variant(variant))
    if curve.terminal_infinite:
        logger.debug("hazard at x=%g has an infinite terminal value", float(x))
    return curve


def conditional_km_survival(sample: CensoredSample, x: float, h: BandwidthLike, kernel: KernelSpec) -> StepFunction:
    w = nw_weights(x, sample, h, kernel)
    return survival_from_jumps(weighted_jumps(sample.z, sample.delta, w))
