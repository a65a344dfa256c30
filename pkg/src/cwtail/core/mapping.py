# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Mapping between accepted dataset headers and the sample fields.

Headers are compared after ``canon``; the first alias present wins.
"""

from __future__ import annotations

from typing import Dict, Tuple


COLUMN_ALIASES: Dict[str, Tuple[str, ...]] = {
    "time": ("time", "z", "survival_time", "t"),
    "delta": ("delta", "status", "event", "death", "dead"),
    "covariate": ("covariate", "x", "age"),
    "id": ("id", "patient", "patient_id"),
}

REQUIRED_FIELDS = ("time", "delta", "covariate")

# Canonical header order when writing a sample back to disk.
OUTPUT_COLUMNS = ("id", "time", "delta", "covariate")
