# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import pandas as pd


def canon(s: str) -> str:
    """Canonicalise names for comparisons (trim + lower, '_' for separators)."""
    return str(s or "").strip().replace(" ", "_").replace("-", "_").lower()


def normalize_columns(df: pd.DataFrame) -> pd.DataFrame:
    """Normalise dataframe column names to a stable snake_case-like lower format."""
    df = df.copy()
    df.columns = pd.Index(df.columns).map(canon)
    return df


def first_existing_col(df: pd.DataFrame, *candidates: str) -> str:
    """Return first existing column name from candidates, else ''."""
    for c in candidates:
        if c in df.columns:
            return c
    return ""


def fmt(value: Any, decimals: int = 4) -> str:
    """Fixed-decimal rendering for tables; missing values print as 'NA'."""
    if value is None:
        return "NA"
    v = float(value)
    if math.isnan(v):
        return "NA"
    return f"{v:.{decimals}f}"


def json_ready(value: Any) -> Any:
    """Replace non-finite floats by None so the payload is strict JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    return value


def write_json(path: Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = json.dumps(json_ready(payload), ensure_ascii=False, indent=2, sort_keys=True)
    path.write_text(raw + "\n", encoding="utf-8")
    return path


def write_frame_csv(path: Path, df: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return path
