from __future__ import annotations

import typer

from urllc_uav.cli.common import (
    ConfigOpt,
    DistributionOpt,
    OutOpt,
    PlacedDistributionOpt,
    PresetOpt,
    SchemeName,
    SchemeOpt,
    SeedOpt,
    WorkersOpt,
    command_scope,
    resolve_config,
    resolve_out,
)
from urllc_uav.core.config import settings
from urllc_uav.harness.io import COMPARISON_FILE, evaluation_filename, placement_filename
from urllc_uav.harness.pipeline import run_evaluation, run_experiment, run_placement
from urllc_uav.harness.report import load_reports, write_report
from urllc_uav.scenario.mobility import Distribution


def place(
    config: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    scheme: SchemeOpt = SchemeName.PROPOSED,
    distribution: DistributionOpt = Distribution.EVEN,
) -> None:
    """Place the UAV for one scheme over a snapshot of VUEs."""
    with command_scope():
        cfg = resolve_config(config, preset=preset, seed=seed)
        out_dir = resolve_out(out)
        document = run_placement(cfg, out_dir, scheme.scheme, distribution)

    s = document.solution
    typer.echo(
        f"scheme={s.scheme} e_u=({s.e_u[0]:.3f}, {s.e_u[1]:.3f}) "
        f"mean_level={s.mean_level:.3f} feasible={s.feasible} "
        f"-> {out_dir / placement_filename(scheme.value)}"
    )


def evaluate(
    config: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    scheme: SchemeOpt = SchemeName.PROPOSED,
    distribution: PlacedDistributionOpt = None,
) -> None:
    """Simulate fresh blocks at a placed position and record the delay tail."""
    with command_scope():
        cfg = resolve_config(config, preset=preset, seed=seed)
        out_dir = resolve_out(out)
        report = run_evaluation(cfg, out_dir, scheme.scheme, distribution)

    typer.echo(
        f"scheme={report.scheme} q0.999={report.quantiles['0.999']:.6g} "
        f"violation_freq={report.violation_freq:.4g} "
        f"-> {out_dir / evaluation_filename(scheme.value)}"
    )


def report(
    config: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
) -> None:
    """Merge the evaluation reports into comparison.csv and per-scheme CCDF files."""
    with command_scope():
        cfg = resolve_config(config, preset=preset, seed=seed)
        out_dir = resolve_out(out)
        frame = write_report(load_reports(out_dir, cfg), out_dir)

    typer.echo(frame.to_string(index=False))
    typer.echo(f"-> {out_dir / COMPARISON_FILE}")


def run(
    config: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    distribution: DistributionOpt = Distribution.EVEN,
    workers: WorkersOpt = None,
) -> None:
    """Whole experiment: collect, fit, train, then place and evaluate every scheme."""
    with command_scope():
        cfg = resolve_config(config, preset=preset, seed=seed)
        out_dir = resolve_out(out)
        reports = run_experiment(
            cfg,
            out_dir,
            distribution,
            workers=workers or settings.workers,
            chunk_blocks=settings.collect_chunk_blocks,
        )

    for r in reports:
        typer.echo(
            f"scheme={r.scheme} q0.999={r.quantiles['0.999']:.6g} "
            f"mean_level={r.mean_level:.3f} violation_freq={r.violation_freq:.4g}"
        )
    typer.echo(f"-> {out_dir / COMPARISON_FILE}")
