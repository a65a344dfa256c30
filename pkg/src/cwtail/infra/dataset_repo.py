# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from cwtail.core.errors import EmptyFile, InvalidSample, ParseError
from cwtail.core.mapping import COLUMN_ALIASES, OUTPUT_COLUMNS, REQUIRED_FIELDS
from cwtail.core.types import CensoredSample
from cwtail.core.utils import first_existing_col, normalize_columns

DATASETS_DIR = Path(__file__).resolve().parents[1] / "datasets"


def bundled_larynx_path() -> Path:
    return DATASETS_DIR / "larynx.csv"


@dataclass(frozen=True)
class DatasetSummary:
    n: int
    uncensored: int
    covariate_median: float
    covariate_sd: Optional[float]  # None when n == 1
    covariate_min: float
    covariate_max: float

    @property
    def points(self) -> Tuple[float, ...]:
        """Evaluation covariates median - sd, median, median + sd."""
        if self.covariate_sd is None:
            return (self.covariate_median,)
        m, s = self.covariate_median, self.covariate_sd
        return (m - s, m, m + s)

    def to_dict(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "uncensored": self.uncensored,
            "covariate_median": self.covariate_median,
            "covariate_sd": self.covariate_sd,
            "covariate_min": self.covariate_min,
            "covariate_max": self.covariate_max,
            "points": list(self.points),
        }


@dataclass(frozen=True, eq=False)
class LoadedDataset:
    path: Path
    sample: CensoredSample
    summary: DatasetSummary
    frame: pd.DataFrame  # every column of the file, normalised headers


def summarize(sample: CensoredSample) -> DatasetSummary:
    x = pd.Series(sample.x)
    sd = float(x.std(ddof=1)) if sample.n > 1 else None
    return DatasetSummary(
        n=sample.n,
        uncensored=sample.n_uncensored,
        covariate_median=float(x.median()),
        covariate_sd=sd,
        covariate_min=float(x.min()),
        covariate_max=float(x.max()),
    )


def _resolve_columns(df: pd.DataFrame) -> Dict[str, str]:
    resolved: Dict[str, str] = {}
    for fld, aliases in COLUMN_ALIASES.items():
        col = first_existing_col(df, *aliases)
        if col:
            resolved[fld] = col
    missing = [f for f in REQUIRED_FIELDS if f not in resolved]
    if missing:
        raise ParseError(
            f"Faltan columnas obligatorias: {', '.join(missing)} (cabecera: {', '.join(df.columns)})",
            [(1, f"columna '{m}' ausente") for m in missing],
        )
    return resolved


def _parse_real(raw: str) -> Optional[float]:
    try:
        v = float(str(raw).strip())
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path: str | Path) -> LoadedDataset:
    """Read a (time, delta, covariate[, id]) CSV strictly.

    Unknown columns are kept in ``frame`` and otherwise ignored. Every bad
    row is reported with its file line number (header = line 1).
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"No existe el fichero '{path}'.")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"El fichero '{path}' está vacío.") from None
    except pd.errors.ParserError as exc:
        raise ParseError(f"CSV mal formado en '{path}': {exc}") from None
    df = normalize_columns(df)
    if df.empty:
        raise EmptyFile(f"El fichero '{path}' no tiene filas de datos.")

    cols = _resolve_columns(df)
    problems: List[Tuple[int, str]] = []
    xs: List[float] = []
    zs: List[float] = []
    ds: List[bool] = []
    for pos, (_, r) in enumerate(df.iterrows()):
        line = pos + 2
        z = _parse_real(r[cols["time"]])
        x = _parse_real(r[cols["covariate"]])
        d = str(r[cols["delta"]]).strip()
        if z is None or z <= 0:
            problems.append((line, f"tiempo no válido '{r[cols['time']]}' (real > 0)"))
        if d not in ("0", "1"):
            problems.append((line, f"delta no válido '{r[cols['delta']]}' (0/1)"))
        if x is None:
            problems.append((line, f"covariable no válida '{r[cols['covariate']]}'"))
        xs.append(x if x is not None else 0.0)
        zs.append(z if z is not None else 0.0)
        ds.append(d == "1")
    if problems:
        raise ParseError(f"Errores en '{path.name}'", problems)

    ids = tuple(str(v) for v in df[cols["id"]]) if "id" in cols else ()
    try:
        sample = CensoredSample(x=np.asarray(xs), z=np.asarray(zs), delta=np.asarray(ds), ids=ids)
    except InvalidSample as exc:  # pragma: no cover - rows were validated above
        raise ParseError(str(exc)) from None
    return LoadedDataset(path=path, sample=sample, summary=summarize(sample), frame=df)


def _num(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(sample: CensoredSample, path: str | Path) -> Path:
    """Write a sample so that ``load_csv`` reads back the same floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ids = list(sample.ids) if sample.ids else [str(i + 1) for i in range(sample.n)]
    df = pd.DataFrame(
        {
            "id": ids,
            "time": [_num(v) for v in sample.z],
            "delta": ["1" if d else "0" for d in sample.delta],
            "covariate": [_num(v) for v in sample.x],
        },
        columns=list(OUTPUT_COLUMNS),
    )
    df.to_csv(path, index=False, lineterminator="\n")
    return path
