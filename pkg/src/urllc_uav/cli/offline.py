from __future__ import annotations

import typer

from urllc_uav.cli.common import (
    ConfigOpt,
    OutOpt,
    PresetOpt,
    SeedOpt,
    WorkersOpt,
    command_scope,
    resolve_config,
    resolve_out,
)
from urllc_uav.core.config import settings
from urllc_uav.harness.io import (
    FITS_FILE,
    MANIFEST_FILE,
    ZONE_MODELS_FILE,
    heldout_ccdf_filename,
)
from urllc_uav.harness.pipeline import (
    heldout_position,
    run_collection,
    run_fits,
    run_heldout_check,
    run_training,
)


def collect(
    config: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
) -> None:
    """Simulate block-maximum delay samples for every zone and training position."""
    with command_scope():
        cfg = resolve_config(config, preset=preset, seed=seed)
        out_dir = resolve_out(out)
        manifest = run_collection(
            cfg,
            out_dir,
            workers=workers or settings.workers,
            chunk_blocks=settings.collect_chunk_blocks,
        )

    typer.echo(f"Collected {len(manifest.entries)} sample sets -> {out_dir / MANIFEST_FILE}")


def fit(
    config: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
) -> None:
    """Fit a GEV law to every collected sample set."""
    with command_scope():
        cfg = resolve_config(config, preset=preset, seed=seed)
        out_dir = resolve_out(out)
        document = run_fits(cfg, out_dir, workers=workers or settings.workers)

    unconverged = sum(not e.report.converged for e in document.entries)
    worst_ks = max(e.ks_distance for e in document.entries)
    typer.echo(
        f"Fitted {len(document.entries)} GEV laws "
        f"(unconverged={unconverged} worst_ks={worst_ks:.4f}) -> {out_dir / FITS_FILE}"
    )


def train(
    config: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
) -> None:
    """Train the per-zone GPR models of (mu, sigma, zeta) over the UAV position."""
    with command_scope():
        cfg = resolve_config(config, preset=preset, seed=seed)
        out_dir = resolve_out(out)
        bundle = run_training(cfg, out_dir)

    for m in bundle.zones:
        h = m.model_mu.hyper
        typer.echo(f"  zone={m.zone} mu: gamma={h.gamma:.4g} ell={h.ell:.4g} lam={h.lam:.4g}")
    typer.echo(f"Trained {len(bundle.zones)} zone models -> {out_dir / ZONE_MODELS_FILE}")


def validate(
    config: ConfigOpt = None,
    preset: PresetOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
) -> None:
    """Check the zone models against fresh simulation at a position off the training grid."""
    with command_scope():
        cfg = resolve_config(config, preset=preset, seed=seed)
        out_dir = resolve_out(out)
        distances = run_heldout_check(cfg, out_dir, workers=workers or settings.workers)

    x, y = heldout_position(cfg)
    for zone, ks in distances.items():
        typer.echo(
            f"  zone={zone} at=({x:.1f}, {y:.1f}) ks={ks:.4f} "
            f"-> {out_dir / heldout_ccdf_filename(zone)}"
        )
