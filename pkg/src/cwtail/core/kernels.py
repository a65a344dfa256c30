# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Compact-support kernels on [-1, 1] and their evaluation."""

from __future__ import annotations

from enum import Enum
from typing import Union

import numpy as np

from cwtail.core.errors import ConfigError


class KernelSpec(str, Enum):
    ASYMMETRIC_LINEAR = "asymmetric-linear"
    BIQUADRATIC = "biquadratic"
    # K = 1 on the whole real line; only reachable through uniform-weights mode.
    UNIFORM = "uniform"

    @property
    def support(self) -> tuple[float, float]:
        if self is KernelSpec.UNIFORM:
            return (-np.inf, np.inf)
        return (-1.0, 1.0)


PUBLIC_KERNELS = (KernelSpec.ASYMMETRIC_LINEAR, KernelSpec.BIQUADRATIC)


def parse_kernel(name: Union[str, KernelSpec], *, allow_internal: bool = False) -> KernelSpec:
    if isinstance(name, KernelSpec):
        kernel = name
    else:
        key = str(name or "").strip().lower().replace("_", "-")
        try:
            kernel = KernelSpec(key)
        except ValueError:
            allowed = ", ".join(k.value for k in PUBLIC_KERNELS)
            raise ConfigError(f"Kernel '{name}' no reconocido. Usa uno de: {allowed}") from None
    if kernel is KernelSpec.UNIFORM and not allow_internal:
        raise ConfigError("El kernel 'uniform' solo se usa con --uniform-weights.")
    return kernel


def eval_kernel(kernel: KernelSpec, u):
    """Evaluate K(u); scalars in, float out, arrays in, arrays out.

    The support indicator is closed: |u| = 1 is inside.
    """
    arr = np.asarray(u, dtype=float)
    if kernel is KernelSpec.UNIFORM:
        out = np.ones_like(arr)
    else:
        inside = np.abs(arr) <= 1.0
        if kernel is KernelSpec.ASYMMETRIC_LINEAR:
            vals = 1.9 - 1.8 * arr
        elif kernel is KernelSpec.BIQUADRATIC:
            vals = (15.0 / 16.0) * (1.0 - arr * arr) ** 2
        else:  # pragma: no cover
            raise ConfigError(f"Kernel '{kernel}' no soportado.")
        out = np.where(inside, vals, 0.0)
    if np.ndim(u) == 0:
        return float(out)
    return out
