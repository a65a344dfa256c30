# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List

from jinja2 import Environment, FileSystemLoader, select_autoescape

from cwtail.core.utils import fmt
from cwtail.montecarlo import McReport
from cwtail.services.fit_service import FitResult

TEMPLATES_DIR = Path(__file__).resolve().parents[1] / "report_templates"

_LABELS = {
    "comp_y": "completo sobre (X, Y)",
    "comp_z": "completo sobre (X, Z)",
    "censored": "adaptado a censura",
}


def _env() -> Environment:
    return Environment(
        loader=FileSystemLoader(str(TEMPLATES_DIR)),
        autoescape=select_autoescape(["html", "xml"]),
    )


def _write(html: str, out_path: Path) -> Path:
    out = Path(out_path).resolve()
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(html, encoding="utf-8")
    return out


def _mc_tables(report: McReport, decimals: int) -> List[Dict[str, Any]]:
    """One table per (scenario, quantity): rows estimator x metric, columns x."""
    df = report.to_frame()
    tables: List[Dict[str, Any]] = []
    for scenario in df["scenario"].drop_duplicates().tolist():
        sub = df[df["scenario"] == scenario]
        xs = sub["x"].drop_duplicates().tolist()
        for kind, title in (("gamma", "Coeficiente de cola"), ("quantile", "Cuantil extremo")):
            rows = []
            truths = []
            for x in xs:
                first = sub[(sub["x"] == x) & sub["estimator"].str.startswith(kind)]
                truths.append(fmt(first["truth"].iloc[0], decimals) if not first.empty else "NA")
            for name in report.config["estimators"]:
                est = f"{kind}_{name}"
                cells = sub[sub["estimator"] == est].set_index("x")
                for metric in ("mse", "mae"):
                    rows.append(
                        {
                            "label": f"{metric.upper()} {_LABELS.get(name, name)}",
                            "cells": [fmt(cells.at[x, metric], decimals + 1) for x in xs],
                        }
                    )
                rows.append(
                    {
                        "label": f"réplicas fallidas {_LABELS.get(name, name)}",
                        "cells": [str(int(cells.at[x, "reps_failed"])) for x in xs],
                    }
                )
            tables.append(
                {
                    "scenario": scenario,
                    "title": title,
                    "xs": [fmt(x, 2) for x in xs],
                    "truths": truths,
                    "rows": rows,
                }
            )
    return tables


def render_mc_html(report: McReport, out_path: Path, decimals: int = 4) -> Path:
    tpl = _env().get_template("mc_report.html.j2")
    context: Dict[str, Any] = {
        "config": report.config,
        "scenarios": report.scenarios,
        "rng": report.rng,
        "tables": _mc_tables(report, decimals),
    }
    return _write(tpl.render(**context), out_path)


def render_fit_html(result: FitResult, out_path: Path, decimals: int = 4) -> Path:
    tpl = _env().get_template("fit_report.html.j2")
    table = result.study_table(decimals).fillna("")
    context: Dict[str, Any] = {
        "dataset": result.dataset.name,
        "summary": result.summary.to_dict(),
        "kernel": result.kernel.value,
        "h": "inf" if result.h == float("inf") else fmt(result.h, decimals),
        "h_source": result.h_source,
        "variant": result.variant.value,
        "survival_level": result.survival_level,
        "columns": list(table.columns),
        "rows": [{"label": idx, "cells": list(r)} for idx, r in zip(table.index, table.values.tolist())],
        "cv": [] if result.cv is None else [
            {"h": fmt(h, decimals), "criterion": fmt(c, decimals), "chosen": h == result.h}
            for h, c in zip(result.cv.grid.candidates, result.cv.scores.tolist())
        ],
    }
    return _write(tpl.render(**context), out_path)
