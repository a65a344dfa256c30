# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Exception hierarchy.

Every domain failure derives from ``CwtailError`` (itself a ``ValueError``).
Each family carries the process exit code the CLI uses for it.
"""

from __future__ import annotations

from typing import List, Optional, Tuple


class CwtailError(ValueError):
    exit_code: int = 1


# --- dataset / parsing ---
class DatasetError(CwtailError):
    exit_code = 3


class ParseError(DatasetError):
    """Malformed dataset; ``problems`` holds (line_number, message) pairs."""

    def __init__(self, message: str, problems: Optional[List[Tuple[int, str]]] = None) -> None:
        self.problems = list(problems or [])
        if self.problems:
            detail = "; ".join(f"línea {ln}: {msg}" for ln, msg in self.problems[:10])
            if len(self.problems) > 10:
                detail += f"; (+{len(self.problems) - 10} más)"
            message = f"{message} ({detail})"
        super().__init__(message)


class EmptyFile(DatasetError):
    pass


# --- configuration ---
class ConfigError(CwtailError):
    exit_code = 4


# --- estimation ---
class EstimationError(CwtailError):
    exit_code = 5


class EmptyNeighborhood(EstimationError):
    pass


class InvalidK(EstimationError):
    pass


class NonPositiveData(EstimationError):
    pass


class ZeroHazardAtThreshold(EstimationError):
    pass


class ZeroDenominator(EstimationError):
    pass


class InvalidLevel(EstimationError):
    pass


class EmptyInput(EstimationError):
    pass


class InvalidSample(EstimationError):
    pass


class DegenerateTail(UserWarning):
    """γ̂ collapsed to 0 (zero numerator); the estimate is still returned."""
