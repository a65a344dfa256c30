# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Domain types shared by every module."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, List, Sequence, Union

import numpy as np

from cwtail.core.errors import InvalidSample


@dataclass(frozen=True)
class Observation:
    x: float
    z: float
    delta: bool  # True = uncensored (event observed)

    def __post_init__(self) -> None:
        if not math.isfinite(self.x):
            raise InvalidSample(f"Covariable no finita: {self.x}")
        if not (self.z > 0 and math.isfinite(self.z)):
            raise InvalidSample(f"Tiempo observado no positivo: {self.z}")


@dataclass(frozen=True)
class Bandwidth:
    h: float

    def __post_init__(self) -> None:
        # +inf is allowed: it is how uniform-weights mode is expressed.
        if not (self.h > 0):
            raise InvalidSample(f"El ancho de banda debe ser > 0 (h={self.h})")

    def __float__(self) -> float:
        return float(self.h)


BandwidthLike = Union[float, int, Bandwidth]


def as_bandwidth(h: BandwidthLike) -> float:
    return float(Bandwidth(float(h)))


@dataclass(frozen=True, eq=False)
class CensoredSample:
    """Triplets (x_i, z_i, delta_i) kept in input order.

    ``order`` is the cached z-sorted index; among equal z, uncensored
    observations come first.
    """

    x: np.ndarray
    z: np.ndarray
    delta: np.ndarray
    ids: tuple = field(default=())

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float).reshape(-1)
        z = np.array(self.z, dtype=float).reshape(-1)
        d = np.array(self.delta).reshape(-1).astype(bool)
        if not (len(x) == len(z) == len(d)):
            raise InvalidSample("x, z y delta deben tener la misma longitud.")
        if len(z) < 1:
            raise InvalidSample("La muestra está vacía (n >= 1).")
        if not np.all(np.isfinite(x)):
            raise InvalidSample("Hay covariables no finitas en la muestra.")
        if not (np.all(np.isfinite(z)) and np.all(z > 0)):
            raise InvalidSample("Todos los tiempos observados deben ser positivos y finitos.")
        for arr in (x, z, d):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "ids", tuple(self.ids))

    # --- constructors ---
    @classmethod
    def from_observations(cls, observations: Iterable[Observation]) -> "CensoredSample":
        obs = list(observations)
        if not obs:
            raise InvalidSample("La muestra está vacía (n >= 1).")
        return cls(
            x=np.array([o.x for o in obs], dtype=float),
            z=np.array([o.z for o in obs], dtype=float),
            delta=np.array([o.delta for o in obs], dtype=bool),
        )

    @classmethod
    def from_arrays(cls, x: Sequence[float], z: Sequence[float], delta: Sequence[bool] | None = None) -> "CensoredSample":
        if delta is None:
            delta = np.ones(len(z), dtype=bool)
        return cls(x=np.asarray(x, dtype=float), z=np.asarray(z, dtype=float), delta=np.asarray(delta, dtype=bool))

    # --- views ---
    @property
    def n(self) -> int:
        return int(self.z.shape[0])

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[Observation]:
        for xi, zi, di in zip(self.x, self.z, self.delta):
            yield Observation(float(xi), float(zi), bool(di))

    def observations(self) -> List[Observation]:
        return list(self)

    @cached_property
    def order(self) -> np.ndarray:
        # lexsort: last key is primary -> z ascending, then uncensored (~delta = False) first
        idx = np.lexsort((~self.delta, self.z))
        idx.setflags(write=False)
        return idx

    @property
    def n_uncensored(self) -> int:
        return int(self.delta.sum())

    # --- derived samples ---
    def as_complete(self) -> "CensoredSample":
        """Same (x, z) with every observation treated as uncensored."""
        return CensoredSample(x=self.x, z=self.z, delta=np.ones(self.n, dtype=bool), ids=self.ids)

    def scaled(self, c: float) -> "CensoredSample":
        return CensoredSample(x=self.x, z=self.z * float(c), delta=self.delta, ids=self.ids)

    def shifted(self, dx: float) -> "CensoredSample":
        return CensoredSample(x=self.x + float(dx), z=self.z, delta=self.delta, ids=self.ids)

    def take(self, index) -> "CensoredSample":
        idx = np.asarray(index)
        ids = tuple(np.asarray(self.ids, dtype=object)[idx]) if self.ids else ()
        return CensoredSample(x=self.x[idx], z=self.z[idx], delta=self.delta[idx], ids=ids)
