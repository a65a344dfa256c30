# Copyright (C) 2026 cwtail contributors
# SPDX-License-Identifier: AGPL-3.0-or-later

"""Command-line surface: ``cwtail fit | simulate | qq | truth``.

Exit codes: 0 success, 3 dataset, 4 configuration, 5 estimation.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from cwtail.core.errors import ConfigError, CwtailError, InvalidK
from cwtail.core.kernels import PUBLIC_KERNELS, parse_kernel
from cwtail.core.types import CensoredSample
from cwtail.core.utils import fmt, write_frame_csv, write_json
from cwtail.infra.dataset_repo import bundled_larynx_path, load_csv
from cwtail.montecarlo import DEFAULT_ALPHA, DEFAULT_X_GRID, CensorRelation, McConfig, ScenarioSpec, run_monte_carlo, truth_table
from cwtail.services.fit_service import FitRequest, run_fit
from cwtail.services.report_service import render_fit_html, render_mc_html
from cwtail.settings import Settings, load_settings
from cwtail.tail import TailVariant

logger = logging.getLogger(__name__)

QQ_COLUMNS = ["loglog_n_over_i", "log_z"]


# --- QQ data ---
@dataclass(frozen=True)
class QQPoints:
    u: Tuple[float, ...]  # log log(n/i)
    v: Tuple[float, ...]  # log Z_{n-i+1,n}

    def __len__(self) -> int:
        return len(self.u)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({QQ_COLUMNS[0]: list(self.u), QQ_COLUMNS[1]: list(self.v)}, columns=QQ_COLUMNS)


def qq_points(sample: CensoredSample, k_n: int) -> QQPoints:
    n = sample.n
    k_n = int(k_n)
    if k_n < 1 or k_n >= n:
        raise InvalidK(f"k_n debe cumplir 1 <= k_n < n (k_n={k_n}, n={n}).")
    z_desc = np.sort(sample.z)[::-1]
    u = tuple(math.log(math.log(n / i)) for i in range(1, k_n + 1))
    v = tuple(math.log(float(z)) for z in z_desc[:k_n])
    return QQPoints(u=u, v=v)


# --- parsing helpers ---
def _float_list(raw: str) -> List[float]:
    try:
        out = [float(s) for s in str(raw).split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de reales no válida: '{raw}'") from None
    if not out:
        raise argparse.ArgumentTypeError("la lista está vacía")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cwtail",
        description="Coeficiente de cola Weibull condicional bajo censura aleatoria por la derecha.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="más detalle en stderr (-v, -vv)")
    parser.add_argument("--config", type=Path, default=None, help="fichero YAML de configuración")
    sub = parser.add_subparsers(dest="command", required=True)
    kernels = [k.value for k in PUBLIC_KERNELS]

    fit = sub.add_parser("fit", help="estimar γ y el cuantil extremo sobre un CSV")
    fit.add_argument("--input", type=Path, default=None, help="CSV (time, delta, covariate); por defecto larynx")
    fit.add_argument("--x", type=float, action="append", default=[], help="covariable (repetible)")
    fit.add_argument("--k", type=int, action="append", default=[], help="k fijo (repetible); sin --k se elige por bloques")
    fit.add_argument("--alpha", type=float, default=0.05, help="nivel de supervivencia p de q(p|x)")
    fit.add_argument("--h", type=float, default=None, help="ancho de banda fijo (sin validación cruzada)")
    fit.add_argument("--uniform-weights", action="store_true", help="pesos iguales (modo no condicional)")
    fit.add_argument("--kernel", choices=kernels, default=None)
    fit.add_argument(
        "--variant",
        choices=[TailVariant.CENSORED.value, TailVariant.COMPLETE_HAZARD.value, TailVariant.COMPLETE_LITERAL.value],
        default=TailVariant.CENSORED.value,
    )
    fit.add_argument("--out", type=Path, default=None, help="JSON de resultados")
    fit.add_argument("--trace-out", type=Path, default=None, help="CSV con γ̂ por k y la desviación por bloque")
    fit.add_argument("--html", type=Path, default=None, help="informe HTML")

    sim = sub.add_parser("simulate", help="estudio de Monte Carlo")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--reps", type=int, required=True)
    sim.add_argument("--scenario", choices=[r.value for r in CensorRelation] + ["all"], default="lt")
    sim.add_argument("--seed", type=int, default=None, help="semilla (obligatoria)")
    sim.add_argument("--x-grid", type=_float_list, default=None, help="p.ej. 0.1,0.5,0.9")
    sim.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="alpha_n; nivel de supervivencia 1 - alpha_n")
    sim.add_argument("--kernel", choices=kernels, default=None)
    sim.add_argument("--h", type=float, default=None)
    sim.add_argument("--k", type=int, default=None)
    sim.add_argument("--auto", action="store_true", help="h por validación cruzada y k por bloques (por defecto)")
    sim.add_argument("--censor-ratio", type=float, default=None, help="c en γ_C = c·γ_Y (un único escenario)")
    sim.add_argument(
        "--complete-variant",
        choices=[TailVariant.COMPLETE_HAZARD.value, TailVariant.COMPLETE_LITERAL.value],
        default=TailVariant.COMPLETE_HAZARD.value,
    )
    sim.add_argument("--n-jobs", type=int, default=None)
    sim.add_argument("--out", type=Path, default=None, help="CSV del informe; el JSON va al lado")
    sim.add_argument("--raw-out", type=Path, default=None, help="CSV con cada estimación por réplica")
    sim.add_argument("--html", type=Path, default=None, help="informe HTML")

    qq = sub.add_parser("qq", help="puntos del gráfico cuantil-cuantil Weibull")
    qq.add_argument("--input", type=Path, default=None)
    qq.add_argument("--k", type=int, required=True)
    qq.add_argument("--out", type=Path, default=None, help="CSV; por defecto stdout")

    truth = sub.add_parser("truth", help="curvas verdaderas del estudio de simulación")
    truth.add_argument("--x-grid", type=_float_list, default=None)
    truth.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    truth.add_argument("--out", type=Path, default=None, help="CSV; por defecto stdout")
    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    logging.captureWarnings(True)


def _emit_csv(df: pd.DataFrame, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(df.to_csv(index=False, lineterminator="\n"))
        return
    print(f"OK -> {write_frame_csv(out, df)}")


# --- commands ---
def cmd_fit(args: argparse.Namespace, settings: Settings) -> int:
    path = args.input or bundled_larynx_path()
    req = FitRequest(
        input=path,
        survival_level=args.alpha,
        xs=tuple(args.x),
        ks=tuple(args.k),
        h=args.h,
        uniform_weights=args.uniform_weights,
        kernel=parse_kernel(args.kernel) if args.kernel else None,
        variant=TailVariant(args.variant),
        want_traces=args.trace_out is not None,
    )
    result = run_fit(req, settings)

    s = result.summary
    print(f"{Path(path).name}: n={s.n}, no censurados={s.uncensored}")
    h_txt = "inf" if math.isinf(result.h) else fmt(result.h, settings.decimals)
    print(f"kernel={result.kernel.value}  h={h_txt} ({result.h_source})  p={result.survival_level:g}")
    print(result.study_table(settings.decimals).fillna("").to_string())

    out = args.out or settings.out_dir / f"fit_{Path(path).stem}.json"
    print(f"OK -> {write_json(out, result.to_dict())}")
    if args.trace_out is not None:
        print(f"OK -> {write_frame_csv(args.trace_out, result.trace_frame())}")
    if args.html is not None:
        print(f"OK -> {render_fit_html(result, args.html, settings.decimals)}")
    return 0


def _scenarios(args: argparse.Namespace) -> List[ScenarioSpec]:
    if args.scenario == "all":
        if args.censor_ratio is not None:
            raise ConfigError("--censor-ratio solo se admite con un único escenario.")
        return [ScenarioSpec.of(r) for r in CensorRelation]
    return [ScenarioSpec.of(args.scenario, args.censor_ratio)]


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    if args.seed is None:
        raise ConfigError("--seed es obligatorio: la simulación no usa semillas de reloj.")
    fixed = args.h is not None or args.k is not None
    if fixed and args.auto:
        raise ConfigError("--auto es incompatible con --h/--k.")
    config = McConfig(
        n=args.n,
        reps=args.reps,
        seed=args.seed,
        x_grid=tuple(args.x_grid) if args.x_grid else DEFAULT_X_GRID,
        alpha=args.alpha,
        kernel=parse_kernel(args.kernel) if args.kernel else settings.simulate_kernel,
        complete_variant=TailVariant(args.complete_variant),
        hazard_variant=settings.hazard_variant,
        auto=not fixed,
        h=args.h,
        k=args.k,
        grid_size=settings.grid_size,
        grid_lower_ratio=settings.grid_lower_ratio,
        grid_upper_ratio=settings.grid_upper_ratio,
        block_size=settings.block_size,
        n_jobs=settings.n_jobs,
        keep_estimates=args.raw_out is not None,
    )
    report = run_monte_carlo(config, _scenarios(args))

    df = report.to_frame()
    shown = df.copy()
    for col in ("truth", "mse", "mae", "mean"):
        shown[col] = shown[col].map(lambda v: fmt(v, settings.decimals + 1))
    print(shown.to_string(index=False))

    out = args.out or settings.out_dir / f"mc_{args.scenario}_n{config.n}_seed{config.seed}.csv"
    print(f"OK -> {report.to_csv(out)}")
    print(f"OK -> {report.to_json(Path(out).with_suffix('.json'))}")
    if args.raw_out is not None:
        print(f"OK -> {report.raw_to_csv(args.raw_out)}")
    if args.html is not None:
        print(f"OK -> {render_mc_html(report, args.html, settings.decimals)}")
    return 0


def cmd_qq(args: argparse.Namespace, settings: Settings) -> int:
    ds = load_csv(args.input or bundled_larynx_path())
    _emit_csv(qq_points(ds.sample, args.k).to_frame(), args.out)
    return 0


def cmd_truth(args: argparse.Namespace, settings: Settings) -> int:
    if not (0.0 < args.alpha < 1.0):
        raise ConfigError(f"alpha debe estar en (0, 1) (alpha={args.alpha}).")
    grid = args.x_grid or list(DEFAULT_X_GRID)
    _emit_csv(truth_table(grid, 1.0 - args.alpha), args.out)
    return 0


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "qq": cmd_qq, "truth": cmd_truth}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        verbosity = {0: None, 1: "INFO"}.get(args.verbose, "DEBUG")
        settings = load_settings(args.config, log_level=verbosity, n_jobs=getattr(args, "n_jobs", None))
        _configure_logging(settings.log_level)
        return COMMANDS[args.command](args, settings)
    except CwtailError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
