# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Weibull-tail coefficient estimators and the Weissman-type quantile.

Variants
--------
- ``uncond``: log-excesses over the k-th largest value divided by the
  matching log-log spacings of n/i.
- ``complete-literal``: kernel-weighted log-excesses over y_n divided by
  kernel-weighted log-log spacings, ranks taken among exceedances.
- ``complete-hazard``: same numerator, denominator built from the kernel
  cumulative hazard of the sample with every delta forced to 1.
- ``censored``: same numerator, denominator built from the Beran cumulative
  hazard of the censored sample.

Conventions shared by the conditional variants: y_n is the (k+1)-th largest
z among observations with positive weight at x, exceedances are the
observations strictly above y_n, and exceedances whose hazard is +inf are
dropped from both sums.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Optional, Union

import numpy as np

from cwtail.core.errors import (
    ConfigError,
    DegenerateTail,
    EstimationError,
    InvalidK,
    InvalidLevel,
    NonPositiveData,
    ZeroDenominator,
    ZeroHazardAtThreshold,
)
from cwtail.core.kernels import KernelSpec
from cwtail.core.types import BandwidthLike, CensoredSample, as_bandwidth
from cwtail.core.weights import nw_weights
from cwtail.survival import HazardCurve, HazardVariant, hazard_from_jumps, parse_hazard_variant, weighted_jumps

logger = logging.getLogger(__name__)


class TailVariant(str, Enum):
    UNCOND = "uncond"
    COMPLETE_LITERAL = "complete-literal"
    COMPLETE_HAZARD = "complete-hazard"
    CENSORED = "censored"


CONDITIONAL_VARIANTS = (TailVariant.COMPLETE_LITERAL, TailVariant.COMPLETE_HAZARD, TailVariant.CENSORED)


def parse_tail_variant(name: Union[str, TailVariant]) -> TailVariant:
    if isinstance(name, TailVariant):
        return name
    key = str(name or "").strip().lower().replace("_", "-")
    try:
        return TailVariant(key)
    except ValueError:
        allowed = ", ".join(v.value for v in TailVariant)
        raise ConfigError(f"Variante de estimador '{name}' no reconocida. Usa una de: {allowed}") from None


@dataclass(frozen=True)
class TailEstimate:
    gamma_hat: float
    k: int
    y_n: float
    h: Optional[float]
    variant: TailVariant
    n_exceedances: int
    hazard_at_threshold: Optional[float] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma_hat": self.gamma_hat,
            "k": self.k,
            "y_n": self.y_n,
            "h": self.h,
            "variant": self.variant.value,
            "n_exceedances": self.n_exceedances,
            "hazard_at_threshold": self.hazard_at_threshold,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass(frozen=True)
class QuantileEstimate:
    q_hat: float
    survival_level: float
    alpha_input: float
    y_n: float
    hazard_at_threshold: float
    gamma_hat: float

    @property
    def anchored(self) -> tuple[float, float, float]:
        return (self.y_n, self.hazard_at_threshold, self.gamma_hat)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q_hat": self.q_hat,
            "survival_level": self.survival_level,
            "alpha_input": self.alpha_input,
            "anchored": {"y_n": self.y_n, "hazard_at_threshold": self.hazard_at_threshold, "gamma_hat": self.gamma_hat},
        }


def _log2(v: float) -> float:
    return math.log(math.log(v))


def _degenerate(variant: TailVariant, k: int) -> None:
    warnings.warn(
        f"Numerador nulo para {variant.value} con k={k}: se devuelve gamma=0.",
        DegenerateTail,
        stacklevel=3,
    )


# --- unconditional ---
def gamma_unconditional(z_sorted: Iterable[float], k: int) -> TailEstimate:
    z = np.sort(np.asarray(list(z_sorted) if not isinstance(z_sorted, np.ndarray) else z_sorted, dtype=float))
    n = int(z.shape[0])
    if n == 0 or np.any(z <= 0) or not np.all(np.isfinite(z)):
        raise NonPositiveData("Los datos deben ser positivos y finitos.")
    k = int(k)
    if k < 2 or k >= n:
        raise InvalidK(f"k debe cumplir 2 <= k < n (k={k}, n={n}).")

    threshold = float(z[n - k])  # Y_{n-k+1,n}
    top = z[n - k :][::-1]  # Y_{n,n}, ..., Y_{n-k+1,n}
    log_thr = math.log(threshold)
    num = math.fsum(math.log(v) - log_thr for v in top.tolist())
    ref = _log2(n / k)
    den = math.fsum(_log2(n / i) - ref for i in range(1, k + 1))

    diagnostics: Dict[str, Any] = {"degenerate": False}
    if num == 0.0:
        _degenerate(TailVariant.UNCOND, k)
        diagnostics["degenerate"] = True
        gamma = 0.0
    else:
        gamma = num / den
    return TailEstimate(
        gamma_hat=gamma,
        k=k,
        y_n=threshold,
        h=None,
        variant=TailVariant.UNCOND,
        n_exceedances=int(np.sum(top > threshold)),
        diagnostics=diagnostics,
    )


# --- conditional ---
@dataclass(frozen=True, eq=False)
class TailContext:
    """Everything about (sample, x, h, kernel) that does not depend on k.

    ``z``/``w`` hold the positive-weight observations sorted by descending z.
    """

    x: float
    h: float
    variant: TailVariant
    z: np.ndarray
    w: np.ndarray
    hazard: HazardCurve

    @property
    def n_eff(self) -> int:
        return int(self.z.shape[0])


def prepare_conditional(
    sample: CensoredSample,
    x: float,
    h: BandwidthLike,
    kernel: KernelSpec,
    variant: Union[str, TailVariant] = TailVariant.CENSORED,
    hazard_variant: Union[str, HazardVariant] = HazardVariant.NEG_LOG_KM,
) -> TailContext:
    variant = parse_tail_variant(variant)
    if variant is TailVariant.UNCOND:
        raise ConfigError("La variante 'uncond' no usa covariable; usa gamma_unconditional.")
    hv = parse_hazard_variant(hazard_variant)
    w = nw_weights(x, sample, h, kernel)
    delta = sample.delta if variant is TailVariant.CENSORED else np.ones(sample.n, dtype=bool)
    hazard = hazard_from_jumps(weighted_jumps(sample.z, delta, w), hv)

    keep = np.flatnonzero(w > 0)
    order = keep[np.argsort(-sample.z[keep], kind="stable")]
    return TailContext(
        x=float(x),
        h=as_bandwidth(h),
        variant=variant,
        z=sample.z[order],
        w=w[order],
        hazard=hazard,
    )


def _threshold(ctx: TailContext, k: int) -> float:
    if k < 1 or k >= ctx.n_eff:
        raise InvalidK(f"k debe cumplir 1 <= k < {ctx.n_eff} (observaciones con peso positivo); k={k}.")
    return float(ctx.z[k])


def estimate_from_context(ctx: TailContext, k: int) -> TailEstimate:
    k = int(k)
    if k < 2:
        raise InvalidK(f"k debe ser >= 2 (k={k}).")
    y_n = _threshold(ctx, k)
    exc = ctx.z > y_n
    z_exc = ctx.z[exc]
    w_exc = ctx.w[exc]
    if z_exc.size == 0:
        raise ZeroDenominator(f"Sin excedencias estrictas sobre y_n={y_n:g} (empates en el umbral).")

    diagnostics: Dict[str, Any] = {"degenerate": False, "excluded_infinite": 0, "n_eff": ctx.n_eff}
    h_thr = float(ctx.hazard(y_n))
    log_y = math.log(y_n)

    if ctx.variant is TailVariant.COMPLETE_LITERAL:
        ref = _log2(ctx.n_eff / k)
        den = math.fsum(
            float(wi) * (_log2(ctx.n_eff / i) - ref) for i, wi in enumerate(w_exc.tolist(), start=1)
        )
        num = math.fsum(float(wi) * (math.log(zi) - log_y) for zi, wi in zip(z_exc.tolist(), w_exc.tolist()))
        n_used = int(z_exc.size)
    else:
        if not (h_thr > 0):
            raise ZeroHazardAtThreshold(
                f"Hazard nulo en el umbral y_n={y_n:g}: no hay eventos no censurados por debajo."
            )
        if math.isinf(h_thr):
            raise ZeroDenominator(f"Hazard infinito en el umbral y_n={y_n:g}.")
        h_exc = np.asarray(ctx.hazard(z_exc), dtype=float)
        finite = np.isfinite(h_exc)
        diagnostics["excluded_infinite"] = int((~finite).sum())
        z_exc, w_exc, h_exc = z_exc[finite], w_exc[finite], h_exc[finite]
        if z_exc.size == 0:
            raise ZeroDenominator(f"Todas las excedencias sobre y_n={y_n:g} tienen hazard infinito.")
        log_h = math.log(h_thr)
        num = math.fsum(float(wi) * (math.log(zi) - log_y) for zi, wi in zip(z_exc.tolist(), w_exc.tolist()))
        den = math.fsum(float(wi) * (math.log(hi) - log_h) for hi, wi in zip(h_exc.tolist(), w_exc.tolist()))
        n_used = int(z_exc.size)

    if num < 0 or den < 0:  # pragma: no cover - excesses and hazards are monotone
        raise EstimationError(f"Sumas negativas en el estimador (num={num}, den={den}).")
    if den == 0.0:
        raise ZeroDenominator(
            f"Denominador nulo con k={k}: no hay eventos no censurados por encima de y_n={y_n:g}."
        )
    if num == 0.0:
        _degenerate(ctx.variant, k)
        diagnostics["degenerate"] = True
        gamma = 0.0
    else:
        gamma = num / den

    return TailEstimate(
        gamma_hat=gamma,
        k=k,
        y_n=y_n,
        h=ctx.h,
        variant=ctx.variant,
        n_exceedances=n_used,
        hazard_at_threshold=h_thr,
        diagnostics=diagnostics,
    )


def gamma_conditional(
    sample: CensoredSample,
    x: float,
    h: BandwidthLike,
    kernel: KernelSpec,
    k: int,
    variant: Union[str, TailVariant] = TailVariant.CENSORED,
    hazard_variant: Union[str, HazardVariant] = HazardVariant.NEG_LOG_KM,
) -> TailEstimate:
    ctx = prepare_conditional(sample, x, h, kernel, variant, hazard_variant)
    return estimate_from_context(ctx, k)


def gamma_curve(ctx: TailContext, ks: Iterable[int]) -> np.ndarray:
    """γ̂ for many k at once through prefix sums; a k that would fail is NaN.

    Agrees with ``estimate_from_context`` up to summation rounding.
    """
    ks = np.asarray(list(ks), dtype=int)
    out = np.full(ks.shape, np.nan)
    n = ctx.n_eff
    valid = (ks >= 2) & (ks < n)
    if not valid.any():
        return out
    kv = ks[valid]
    z, w = ctx.z, ctx.w
    y = z[kv]
    # number of z strictly above y (z is descending)
    m = n - np.searchsorted(z[::-1], y, side="right")
    logz = np.log(z)

    if ctx.variant is TailVariant.COMPLETE_LITERAL:
        ranks = np.arange(1, n + 1, dtype=float)
        ll = np.zeros(n)
        ll[:-1] = np.log(np.log(n / ranks[:-1]))
        W = np.r_[0.0, np.cumsum(w)]
        A = np.r_[0.0, np.cumsum(w * logz)]
        C = np.r_[0.0, np.cumsum(w * ll)]
        num = A[m] - W[m] * np.log(y)
        den = C[m] - W[m] * np.log(np.log(n / kv))
        bad = m == 0
    else:
        hz = np.asarray(ctx.hazard(z), dtype=float)
        usable = np.isfinite(hz) & (hz > 0)
        wf = np.where(usable, w, 0.0)
        with np.errstate(divide="ignore"):
            lh = np.where(usable, np.log(np.where(usable, hz, 1.0)), 0.0)
        W = np.r_[0.0, np.cumsum(wf)]
        A = np.r_[0.0, np.cumsum(wf * logz)]
        B = np.r_[0.0, np.cumsum(wf * lh)]
        nf = np.r_[0, np.cumsum(usable)]
        hy = np.asarray(ctx.hazard(y), dtype=float)
        bad = (m == 0) | ~(hy > 0) | np.isinf(hy)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_hy = np.log(np.where(bad, 1.0, hy))
        num = A[m] - W[m] * np.log(y)
        den = B[m] - W[m] * log_hy
        bad |= nf[m] == 0

    with np.errstate(divide="ignore", invalid="ignore"):
        res = np.where(~bad & (den > 0), num / np.where(den > 0, den, 1.0), np.nan)
    out[valid] = res
    return out


def threshold_from_k(sample: CensoredSample, x: float, h: BandwidthLike, kernel: KernelSpec, k: int) -> float:
    w = nw_weights(x, sample, h, kernel)
    z = np.sort(sample.z[w > 0])[::-1]
    if int(k) < 1 or int(k) >= z.shape[0]:
        raise InvalidK(f"k debe cumplir 1 <= k < {z.shape[0]} (observaciones con peso positivo); k={k}.")
    return float(z[int(k)])


# --- quantile ---
def weissman_quantile(
    survival_level: float,
    tail: TailEstimate,
    hazard_at_threshold: Optional[float] = None,
    alpha_input: Optional[float] = None,
) -> QuantileEstimate:
    p = float(survival_level)
    if not (0.0 < p < 1.0):
        raise InvalidLevel(f"El nivel debe estar en (0, 1) (p={survival_level}).")
    hz = tail.hazard_at_threshold if hazard_at_threshold is None else float(hazard_at_threshold)
    if hz is None or not (hz > 0) or math.isinf(hz):
        raise ZeroHazardAtThreshold(f"Hazard en el umbral no válido para extrapolar ({hz}).")
    # a degenerate tail (γ̂ = 0) has nothing to extrapolate
    if not tail.gamma_hat > 0:
        raise EstimationError(f"gamma debe ser > 0 para extrapolar (gamma={tail.gamma_hat}).")
    ratio = -math.log(p) / hz
    q = tail.y_n * ratio ** tail.gamma_hat
    return QuantileEstimate(
        q_hat=q,
        survival_level=p,
        alpha_input=p if alpha_input is None else float(alpha_input),
        y_n=tail.y_n,
        hazard_at_threshold=hz,
        gamma_hat=tail.gamma_hat,
    )
