# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Nadaraya-Watson weights B_i(x) = K((x - X_i)/h) / sum_j K((x - X_j)/h)."""

from __future__ import annotations

import math

import numpy as np

from cwtail.core.errors import EmptyNeighborhood
from cwtail.core.kernels import KernelSpec, eval_kernel
from cwtail.core.types import BandwidthLike, CensoredSample, as_bandwidth


def kernel_values(x: float, covariates: np.ndarray, h: BandwidthLike, kernel: KernelSpec) -> np.ndarray:
    """Unnormalised K((x - X_i)/h), same order as ``covariates``."""
    hh = as_bandwidth(h)
    u = (float(x) - np.asarray(covariates, dtype=float)) / hh
    return eval_kernel(kernel, np.atleast_1d(u))


def nw_weights(x: float, sample: CensoredSample, h: BandwidthLike, kernel: KernelSpec) -> np.ndarray:
    k = kernel_values(x, sample.x, h, kernel)
    if not np.any(k > 0):
        raise EmptyNeighborhood(
            f"No hay observaciones a distancia <= h={as_bandwidth(h):g} de x={float(x):g}."
        )
    total = math.fsum(k.tolist())
    return k / total
