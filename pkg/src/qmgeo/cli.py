"""
qmgeo CLI: reproducible QMGeo experiments from the command line.

Usage:
    qmgeo pmf --config run.json                    # output PMF for one input
    qmgeo quantize --input grad.csv --seed 7       # quantize a vector
    qmgeo privacy --preset privacy_paper           # accountant report + sweeps
    qmgeo simulate --preset qmgeo_r8_p09 --out runs/r8p09
    qmgeo bound --metrics runs/quad/metrics.csv --summary runs/quad/summary.json
    qmgeo presets                                  # list bundled presets

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import pandas as pd
import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from qmgeo.config import RunConfig, load_config, parse_config
from qmgeo.constants import EXIT_DATA_ERROR
from qmgeo.errors import ConfigError, DataError, QMGeoError
from qmgeo.flsim.engine import RoundMetrics, simulate as run_simulation
from qmgeo.tools.convergence_tools import BoundParams, bound_table
from qmgeo.tools.privacy_tools import build_report, sweep
from qmgeo.tools.quantizer_tools import (
    clip_elementwise,
    klevel_output_distribution,
    output_distribution,
    quantize_vector,
)
from qmgeo.utils.preset_loader import find_preset, format_presets_table, load_presets
from qmgeo.utils.streams import PURPOSE_QUANTIZE, derive_seed
from qmgeo.utils.table_io import format_eps, read_table, read_vector, write_json, write_table

logger = logging.getLogger(__name__)

console = Console()

app = typer.Typer(
    name="qmgeo",
    help="qmgeo – QMGeo quantization, privacy accounting and federated simulation.",
    no_args_is_help=True,
    add_completion=False,
)


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

ConfigOpt = typer.Option(None, "--config", "-c", help="Run config (JSON or YAML).")
PresetOpt = typer.Option(None, "--preset", "-p", help="Bundled experiment preset name.")
PresetsDirOpt = typer.Option(None, "--presets-dir", help="Extra directory of preset YAML files.")
OutOpt = typer.Option(None, "--out", "-o", help="Output directory (overrides output_dir).")
SeedOpt = typer.Option(None, "--seed", "-s", help="Master seed, unsigned 64-bit (overrides master_seed).")
VerboseOpt = typer.Option(False, "--verbose", "-v", help="Enable debug logging.")


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(name)s %(levelname)s %(message)s",
        force=True,
    )


def _resolve_config(
    config: Optional[Path],
    preset: Optional[str],
    presets_dir: Optional[Path],
    out: Optional[Path],
    seed: Optional[int],
) -> RunConfig:
    if config is not None and preset is not None:
        raise ConfigError("use either --config or --preset, not both", "preset")
    if config is not None:
        cfg = load_config(config)
    elif preset is not None:
        found = find_preset(preset, extra_dir=presets_dir)
        logger.info("Using preset '%s' from %s", found["name"], found["_source"])
        cfg = parse_config(found.get("config") or {})
    else:
        cfg = parse_config({})
    return cfg.with_seed(seed).with_output_dir(None if out is None else str(out))


def _run(body: Callable[[], None]) -> None:
    """Run a command body, mapping library errors onto exit codes."""
    try:
        body()
    except QMGeoError as exc:
        console.print(f"error: {exc}", style="bold red")
        raise typer.Exit(code=exc.exit_code)
    except OSError as exc:
        console.print(f"error: {exc}", style="bold red")
        raise typer.Exit(code=EXIT_DATA_ERROR)


def _summary_panel(title: str, rows: Dict[str, Any]) -> None:
    table = Table(show_header=False, box=None)
    for key, value in rows.items():
        if isinstance(value, float):
            value = format_eps(value) if key.startswith("eps") else f"{value:.6g}"
        table.add_row(f"[bold]{key}[/bold]", str(value))
    console.print(Panel(table, title=title, expand=False))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@app.command()
def pmf(
    w: Optional[float] = typer.Option(None, "--w", help="Input value (overrides pmf.w)."),
    config: Optional[Path] = ConfigOpt,
    preset: Optional[str] = PresetOpt,
    presets_dir: Optional[Path] = PresetsDirOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    verbose: bool = VerboseOpt,
) -> None:
    """Output distribution over quantization levels for one input value."""
    _setup_logging(verbose)

    def body():
        cfg = _resolve_config(config, preset, presets_dir, out, seed)
        value = cfg.pmf.w if w is None else w
        q = cfg.quantizer
        if cfg.pmf.mechanism == "klevel":
            dist = klevel_output_distribution(value, q)
        else:
            dist = output_distribution(value, q)
        df = pd.DataFrame(
            {
                "level_index": list(dist.support),
                "bin_value": [float(q.levels[k]) for k in dist.support],
                "mass": list(dist.masses),
            }
        )
        path = write_table(df, Path(cfg.output_dir) / "pmf.csv", "qmgeo.pmf")
        _summary_panel(
            "pmf",
            {"w": value, "R": q.R, "p": q.p, "mode": q.mode, "mechanism": cfg.pmf.mechanism, "written": path},
        )

    _run(body)


@app.command()
def quantize(
    input: Optional[Path] = typer.Option(None, "--input", "-i", help="Single-column CSV of reals."),
    config: Optional[Path] = ConfigOpt,
    preset: Optional[str] = PresetOpt,
    presets_dir: Optional[Path] = PresetsDirOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    verbose: bool = VerboseOpt,
) -> None:
    """Quantize a vector element-wise with QMGeo."""
    _setup_logging(verbose)

    def body():
        cfg = _resolve_config(config, preset, presets_dir, out, seed)
        source = input if input is not None else cfg.quantize.input
        if source is None:
            raise ConfigError("no input vector; pass --input or set quantize.input", "quantize.input")
        g = read_vector(source)
        if cfg.quantize.clip:
            g = clip_elementwise(g, cfg.quantizer.w_max)
        values = quantize_vector(g, cfg.quantizer, derive_seed(cfg.master_seed, PURPOSE_QUANTIZE))
        df = pd.DataFrame(
            {"level_index": [v.level_index for v in values], "value": [v.value for v in values]}
        )
        path = write_table(df, Path(cfg.output_dir) / "quantized.csv", "qmgeo.quantize")
        _summary_panel("quantize", {"elements": len(values), "R": cfg.quantizer.R, "written": path})

    _run(body)


@app.command()
def privacy(
    config: Optional[Path] = ConfigOpt,
    preset: Optional[str] = PresetOpt,
    presets_dir: Optional[Path] = PresetsDirOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    verbose: bool = VerboseOpt,
) -> None:
    """Closed-form and oracle privacy report plus the ε sweeps."""
    _setup_logging(verbose)

    def body():
        cfg = _resolve_config(config, preset, presets_dir, out, seed)
        pb, q = cfg.privacy, cfg.quantizer
        out_dir = Path(cfg.output_dir)

        report = build_report(q, pb.d, pb.kappa, pb.alpha, pb.grid_points, pb.delta, pb.rounds)
        write_json({"config": cfg.to_dict(), "report": report.to_dict()}, out_dir / "privacy_report.json")
        write_table(sweep("eps_vs_p", q.R, pb.p_grid), out_dir / "eps_vs_p.csv", "qmgeo.sweep")
        write_table(
            sweep("eps_vs_p_multi", list(pb.sweep_levels), pb.p_grid),
            out_dir / "eps_vs_p_multi.csv",
            "qmgeo.sweep",
        )
        write_table(sweep("rdp_vs_alpha", q.R, pb.alpha_grid, p=q.p), out_dir / "rdp_vs_alpha.csv", "qmgeo.sweep")

        _summary_panel(
            "privacy",
            {
                "R": q.R,
                "p": q.p,
                "mode": q.mode,
                "eps_pure_scalar": report.eps_pure_scalar,
                "eps_pure_vector": report.eps_pure_vector,
                "eps_rdp_vector": report.eps_rdp_vector,
                "eps_oracle_scalar": report.eps_oracle_scalar,
                "eps_oracle_klevel": report.eps_oracle_klevel,
                "written": out_dir,
            },
        )
        for note in report.notes:
            console.print(f"note: {note}", style="dim")

    _run(body)


@app.command()
def simulate(
    config: Optional[Path] = ConfigOpt,
    preset: Optional[str] = PresetOpt,
    presets_dir: Optional[Path] = PresetsDirOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    verbose: bool = VerboseOpt,
) -> None:
    """Run federated training and write per-round metrics plus a run summary."""
    _setup_logging(verbose)

    def body():
        cfg = _resolve_config(config, preset, presets_dir, out, seed)
        run = run_simulation(cfg.fl)
        out_dir = Path(cfg.output_dir)
        df = pd.DataFrame([m.to_dict() for m in run.metrics], columns=RoundMetrics.columns())
        write_table(df, out_dir / "metrics.csv", "qmgeo.metrics")
        write_json({"config": cfg.to_dict(), "summary": run.summary}, out_dir / "summary.json")
        _summary_panel(
            "simulate",
            {
                "objective": run.summary["objective"],
                "model_dim": run.summary["model_dim"],
                "rounds": run.summary["rounds"],
                "final_train_loss": run.summary["final_train_loss"],
                "final_holdout_accuracy": run.summary["final_holdout_accuracy"],
                "eps_round_rdp": run.summary["eps_round_rdp"],
                "eps_cumulative": run.summary["eps_cumulative"],
                "written": out_dir,
            },
        )

    _run(body)


def _summary_constants(path: Path) -> Dict[str, float]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from exc
    summary = doc.get("summary", doc) if isinstance(doc, dict) else {}
    return {k: float(summary[k]) for k in ("L", "mu", "f_star") if k in summary}


@app.command()
def bound(
    metrics: Optional[Path] = typer.Option(None, "--metrics", "-m", help="metrics.csv from simulate."),
    summary: Optional[Path] = typer.Option(
        None, "--summary", help="summary.json from a quadratic simulate run (supplies L, mu, F*)."
    ),
    config: Optional[Path] = ConfigOpt,
    preset: Optional[str] = PresetOpt,
    presets_dir: Optional[Path] = PresetsDirOpt,
    out: Optional[Path] = OutOpt,
    seed: Optional[int] = SeedOpt,
    verbose: bool = VerboseOpt,
) -> None:
    """Optimality-gap bound trajectory and per-round descent-inequality flags."""
    _setup_logging(verbose)

    def body():
        cfg = _resolve_config(config, preset, presets_dir, out, seed)
        bb = cfg.bound
        out_dir = Path(cfg.output_dir)

        constants: Dict[str, float] = {}
        if summary is not None:
            constants.update(_summary_constants(summary))
        for key in ("L", "mu", "f_star"):
            if getattr(bb, key) is not None:
                constants[key] = getattr(bb, key)
        for key in ("L", "mu", "f_star"):
            if key not in constants:
                raise ConfigError("required (set it in the bound block or pass --summary)", f"bound.{key}")

        source = metrics or (Path(bb.metrics) if bb.metrics else out_dir / "metrics.csv")
        table = read_table(source, "qmgeo.metrics")
        if table.empty:
            raise DataError("metrics table has no rows", str(source))
        if "train_loss" not in table.columns:
            raise DataError("metrics table is missing column 'train_loss'", str(source))

        f_star = constants["f_star"]
        F0_gap = bb.F0_gap if bb.F0_gap is not None else float(table["train_loss"].iloc[0]) - f_star
        bp = BoundParams(
            L=constants["L"],
            mu=constants["mu"],
            eta=bb.eta if bb.eta is not None else cfg.fl.learning_rate,
            F0_gap=F0_gap,
            T=bb.T if bb.T is not None else len(table),
        )
        result = bound_table(bp, table, f_star)
        write_table(result, out_dir / "bound.csv", "qmgeo.bound")

        n_bad = int((~result["inequality_holds"]).sum())
        _summary_panel(
            "bound",
            {
                "L": bp.L,
                "mu": bp.mu,
                "eta": bp.eta,
                "X": bp.X,
                "contracting": bp.contracting,
                "rounds": bp.T,
                "violations": n_bad,
                "final_gap": float(result["empirical_gap"].iloc[-1]),
                "final_bound": float(result["bound_G_t_recursive"].iloc[-1]),
                "written": out_dir / "bound.csv",
            },
        )
        if not math.isfinite(bp.X) or not bp.contracting:
            console.print("warning: X is outside (0, 1); the recursion does not contract", style="yellow")

    _run(body)


@app.command()
def presets(
    presets_dir: Optional[Path] = PresetsDirOpt,
    verbose: bool = VerboseOpt,
) -> None:
    """List the available experiment presets."""
    _setup_logging(verbose)
    table = Table(title="qmgeo presets")
    table.add_column("name", style="bold")
    table.add_column("description")
    table.add_column("file", style="dim")
    for row in format_presets_table(load_presets(extra_dir=presets_dir)):
        table.add_row(*row)
    console.print(table)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
