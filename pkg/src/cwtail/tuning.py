# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Data-driven choice of the bandwidth h and of the threshold count k.

Bandwidth: leave-one-out cross-validation of the kernel conditional
Kaplan-Meier estimator,

    CV(h) = sum_i sum_j (1{Z_i > Z_j} - S_{-i}(Z_j | x_i))^2

Threshold count: γ̂_k is computed for k = 1..K, the k-axis is cut into
consecutive blocks of 10, the block with the smallest sample standard
deviation wins and k* is the lower middle of that block.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from cwtail.core.errors import ConfigError, DegenerateTail, EstimationError, InvalidSample
from cwtail.core.kernels import KernelSpec, eval_kernel
from cwtail.core.types import BandwidthLike, CensoredSample
from cwtail.survival import HazardVariant, group_times
from cwtail.tail import TailVariant, estimate_from_context, gamma_curve, prepare_conditional

logger = logging.getLogger(__name__)

BLOCK_SIZE = 10


# --- bandwidth ---
@dataclass(frozen=True)
class BandwidthGrid:
    candidates: Tuple[float, ...]

    def __post_init__(self) -> None:
        cands = tuple(float(c) for c in self.candidates)
        if not cands:
            raise ConfigError("La rejilla de anchos de banda está vacía.")
        if any(not (c > 0 and math.isfinite(c)) for c in cands):
            raise ConfigError("Los anchos de banda deben ser positivos y finitos.")
        if any(b <= a for a, b in zip(cands, cands[1:])):
            raise ConfigError("La rejilla de anchos de banda debe ser estrictamente creciente.")
        object.__setattr__(self, "candidates", cands)

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    @classmethod
    def geometric(cls, lo: float, hi: float, size: int) -> "BandwidthGrid":
        if size < 1:
            raise ConfigError(f"Tamaño de rejilla no válido: {size}")
        if size == 1:
            return cls((float(lo),))
        if not (0 < lo < hi):
            raise ConfigError(f"Extremos de rejilla no válidos: [{lo}, {hi}]")
        return cls(tuple(np.geomspace(lo, hi, int(size)).tolist()))


def default_grid(
    sample: CensoredSample,
    size: int = 20,
    lower_ratio: float = 1.0 / 20.0,
    upper_ratio: float = 2.0,
) -> BandwidthGrid:
    """Geometric candidates from ``lower_ratio`` to ``upper_ratio`` times the covariate range."""
    span = float(np.max(sample.x) - np.min(sample.x))
    if not span > 0:
        raise ConfigError("La covariable es constante: no se puede construir la rejilla de h.")
    if not (0 < lower_ratio < upper_ratio):
        raise ConfigError(f"Ratios de rejilla no válidos: {lower_ratio}, {upper_ratio}")
    return BandwidthGrid.geometric(span * lower_ratio, span * upper_ratio, size)


@dataclass(frozen=True, eq=False)
class _CvLayout:
    """Per-sample pieces of the criterion that do not depend on h."""

    order: np.ndarray
    starts: np.ndarray
    delta_sorted: np.ndarray
    group_of_z: np.ndarray
    indicator: np.ndarray  # [i, j] = 1{Z_i > Z_j}


def _layout(sample: CensoredSample) -> _CvLayout:
    order = np.asarray(sample.order)
    zs = sample.z[order]
    times, starts = group_times(zs)
    group_of_z = np.searchsorted(times, sample.z, side="right") - 1
    indicator = (sample.z[:, None] > sample.z[None, :]).astype(float)
    return _CvLayout(
        order=order,
        starts=starts,
        delta_sorted=sample.delta[order].astype(float),
        group_of_z=group_of_z,
        indicator=indicator,
    )


def _loo_survival(sample: CensoredSample, layout: _CvLayout, h: float, kernel: KernelSpec) -> np.ndarray:
    """Matrix S[i, j] = leave-one-out conditional KM at x_i evaluated at Z_j."""
    u = (sample.x[:, None] - sample.x[None, :]) / h
    kmat = np.asarray(eval_kernel(kernel, u), dtype=float)
    np.fill_diagonal(kmat, 0.0)
    w = kmat[:, layout.order]
    total = np.add.reduceat(w, layout.starts, axis=1)
    events = np.add.reduceat(w * layout.delta_sorted[None, :], layout.starts, axis=1)
    at_risk = np.cumsum(total[:, ::-1], axis=1)[:, ::-1]
    ratio = np.divide(events, at_risk, out=np.zeros_like(events), where=at_risk > 0)
    surv = np.cumprod(1.0 - np.clip(ratio, 0.0, 1.0), axis=1)
    empty = ~(kmat > 0).any(axis=1)
    surv[empty, :] = 1.0
    return surv[:, layout.group_of_z]


def cv_criterion(sample: CensoredSample, h: BandwidthLike, kernel: KernelSpec) -> float:
    if sample.n < 3:
        raise InvalidSample(f"La validación cruzada necesita n >= 3 (n={sample.n}).")
    layout = _layout(sample)
    surv = _loo_survival(sample, layout, float(h), kernel)
    return math.fsum(((layout.indicator - surv) ** 2).ravel().tolist())


def cv_scores(sample: CensoredSample, grid: BandwidthGrid, kernel: KernelSpec) -> np.ndarray:
    if sample.n < 3:
        raise InvalidSample(f"La validación cruzada necesita n >= 3 (n={sample.n}).")
    layout = _layout(sample)
    scores = []
    for h in grid:
        surv = _loo_survival(sample, layout, h, kernel)
        scores.append(math.fsum(((layout.indicator - surv) ** 2).ravel().tolist()))
    return np.asarray(scores, dtype=float)


@dataclass(frozen=True, eq=False)
class CvSelection:
    h: float
    grid: BandwidthGrid
    scores: np.ndarray

    @property
    def on_boundary(self) -> bool:
        return len(self.grid) > 1 and self.h in (self.grid.candidates[0], self.grid.candidates[-1])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"h": list(self.grid.candidates), "criterion": self.scores.tolist()})


def cv_select(sample: CensoredSample, grid: BandwidthGrid, kernel: KernelSpec) -> CvSelection:
    """Grid candidate minimizing the criterion; exact ties go to the smallest h."""
    scores = cv_scores(sample, grid, kernel)
    best = int(np.argmin(scores))
    sel = CvSelection(h=grid.candidates[best], grid=grid, scores=scores)
    logger.info("cv bandwidth h=%.6g (criterion %.6g, candidate %d/%d)", sel.h, scores[best], best + 1, len(grid))
    if sel.on_boundary:
        logger.warning(
            "cv minimum at the grid boundary h=%.6g of [%.6g, %.6g]; widen the grid ratios",
            sel.h,
            grid.candidates[0],
            grid.candidates[-1],
        )
    return sel


def cv_bandwidth(sample: CensoredSample, grid: BandwidthGrid, kernel: KernelSpec) -> float:
    if len(grid) == 1:
        return grid.candidates[0]
    return cv_select(sample, grid, kernel).h


# --- threshold count ---
@dataclass(frozen=True)
class KSelectionTrace:
    per_k_estimates: Tuple[Tuple[int, float], ...]
    blocks: Tuple[Tuple[int, int], ...]
    block_sds: Tuple[float, ...]
    chosen_k: int
    chosen_block: int

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for k, g in self.per_k_estimates:
            b = next((i for i, (lo, hi) in enumerate(self.blocks) if lo <= k <= hi), None)
            rows.append(
                {
                    "k": k,
                    "gamma_hat": g,
                    "block": b,
                    "block_sd": self.block_sds[b] if b is not None else float("nan"),
                    "chosen": k == self.chosen_k,
                }
            )
        return pd.DataFrame(rows, columns=["k", "gamma_hat", "block", "block_sd", "chosen"])


def _blocks(K: int, size: int) -> List[Tuple[int, int]]:
    if K < size:
        return [(1, K)]
    return [(lo, lo + size - 1) for lo in range(1, K - size + 2, size)]


def select_k(per_k_estimates: Sequence[float], block_size: int = BLOCK_SIZE) -> KSelectionTrace:
    """Pick k* from estimates indexed by k = 1..K (NaN marks a failed k).

    Only full blocks compete unless K < block_size. A block with more than
    half of its entries missing, or fewer than two valid entries, is out.
    If the lower middle itself failed, the nearest valid k of the block is
    used (lower side first).
    """
    est = np.asarray(list(per_k_estimates), dtype=float)
    K = int(est.shape[0])
    if K < 1:
        raise EstimationError("select_k necesita al menos una estimación.")
    if block_size < 1:
        raise ConfigError(f"Tamaño de bloque no válido: {block_size}")

    blocks = _blocks(K, int(block_size))
    sds: List[float] = []
    for lo, hi in blocks:
        vals = est[lo - 1 : hi]
        valid = vals[np.isfinite(vals)]
        missing = vals.size - valid.size
        if missing * 2 > vals.size or valid.size < 2:
            sds.append(float("nan"))
        else:
            sds.append(float(np.std(valid, ddof=1)))

    best: Optional[int] = None
    for b, sd in enumerate(sds):
        if math.isnan(sd):
            continue
        if best is None or sd < sds[best]:
            best = b
    if best is None:
        if K == 1 and np.isfinite(est[0]):
            best = 0
        else:
            raise EstimationError("Ningún bloque de k tiene estimaciones suficientes.")

    lo, hi = blocks[best]
    chosen = (lo + hi) // 2
    if not np.isfinite(est[chosen - 1]):
        candidates = [k for k in range(lo, hi + 1) if np.isfinite(est[k - 1])]
        chosen = min(candidates, key=lambda k: (abs(k - chosen), k))

    return KSelectionTrace(
        per_k_estimates=tuple((k, float(est[k - 1])) for k in range(1, K + 1)),
        blocks=tuple(blocks),
        block_sds=tuple(sds),
        chosen_k=int(chosen),
        chosen_block=int(best),
    )


def per_k_estimates(
    sample: CensoredSample,
    x: float,
    h: BandwidthLike,
    kernel: KernelSpec,
    hazard_variant: Union[str, HazardVariant] = HazardVariant.NEG_LOG_KM,
    variant: Union[str, TailVariant] = TailVariant.CENSORED,
    ks: Optional[Iterable[int]] = None,
) -> np.ndarray:
    """γ̂_k for k = 1..n_eff-1 (or ``ks``); a k that fails is NaN.

    If every k fails the last estimation error is raised.
    """
    ctx = prepare_conditional(sample, x, h, kernel, variant, hazard_variant)
    ks = list(range(1, ctx.n_eff)) if ks is None else list(ks)
    if not ks:
        raise EstimationError(f"No hay valores de k posibles en x={float(x):g} (n_eff={ctx.n_eff}).")
    out = gamma_curve(ctx, ks)
    if not np.isfinite(out).any():
        # surface the error the last k actually raises
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateTail)
            estimate_from_context(ctx, ks[-1])
        raise EstimationError(f"Ningún k produce una estimación en x={float(x):g}.")
    return out


def select_k_at(
    sample: CensoredSample,
    x: float,
    h: BandwidthLike,
    kernel: KernelSpec,
    hazard_variant: Union[str, HazardVariant] = HazardVariant.NEG_LOG_KM,
    block_size: int = BLOCK_SIZE,
) -> KSelectionTrace:
    est = per_k_estimates(sample, x, h, kernel, hazard_variant)
    trace = select_k(est, block_size=block_size)
    logger.debug("x=%g: k*=%d (block %d, sd %.4g)", float(x), trace.chosen_k, trace.chosen_block, trace.block_sds[trace.chosen_block])
    return trace
