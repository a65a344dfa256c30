#!/usr/bin/env python3
"""Pin the current larynx results as the self-regression golden file.

Re-run after an intentional numerical change and commit the JSON.
"""

from __future__ import annotations

from pathlib import Path

from cwtail.core.utils import write_json
from cwtail.infra.dataset_repo import bundled_larynx_path
from cwtail.services.fit_service import FitRequest, run_fit
from cwtail.settings import Settings

GOLDEN_PATH = Path(__file__).resolve().parents[1] / "tests" / "data" / "larynx_golden.json"
PINNED_KS = (54, 37)
SURVIVAL_LEVEL = 0.05


def main() -> None:
    result = run_fit(
        FitRequest(input=bundled_larynx_path(), survival_level=SURVIVAL_LEVEL, ks=PINNED_KS),
        Settings(),
    )
    out = write_json(GOLDEN_PATH, result.regression_payload())
    print(f"OK -> {out}")


if __name__ == "__main__":
    main()
