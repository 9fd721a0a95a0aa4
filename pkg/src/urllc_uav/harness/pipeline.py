from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import TypeVar

import numpy as np
from numpy.typing import NDArray

from urllc_uav.core.errors import (
    ConfigurationError,
    IncompleteDatasetError,
    InfeasibleChannelError,
)
from urllc_uav.core.rng import stream
from urllc_uav.evt.fit import fit_gev
from urllc_uav.evt.gev import ks_distance
from urllc_uav.gpr.schema import ZoneModel
from urllc_uav.gpr.train import build_zone_models
from urllc_uav.harness.collect import block_maxima, collect_position
from urllc_uav.harness.evaluation import (
    evaluate_scheme,
    fleet_from_records,
    place_and_select,
    vue_records,
    vue_snapshot,
)
from urllc_uav.harness.io import (
    FITS_FILE,
    MANIFEST_FILE,
    ZONE_MODELS_FILE,
    evaluation_filename,
    fit_ccdf_filename,
    heldout_ccdf_filename,
    params_map_filename,
    placement_filename,
    read_json_document,
    read_samples_csv,
    require_matching_hash,
    samples_filename,
    write_frame,
    write_json_document,
    write_samples_csv,
)
from urllc_uav.harness.report import (
    fit_ccdf_frame,
    heldout_ccdf_frame,
    params_map_frame,
    predicted_law,
    write_report,
)
from urllc_uav.harness.schema import (
    SCHEMES,
    CollectionManifest,
    EvaluationReport,
    FitEntry,
    FitsDocument,
    ManifestEntry,
    PlacementDocument,
    Scheme,
    ZoneModelBundle,
)
from urllc_uav.scenario.area import ZoneId
from urllc_uav.scenario.experiment import ExperimentConfig, config_hash
from urllc_uav.scenario.mobility import Distribution, Fleet

logger = logging.getLogger(__name__)

ArrayF64 = NDArray[np.float64]
TaskT = TypeVar("TaskT")
ResultT = TypeVar("ResultT")


def _run_tasks(
    fn: Callable[[TaskT], ResultT], tasks: Iterable[TaskT], workers: int
) -> Iterator[ResultT]:
    """Ordered map over `tasks`, in a process pool when `workers` > 1."""
    if workers <= 1:
        yield from map(fn, tasks)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, tasks)


def _collect_task(args: tuple[ExperimentConfig, ZoneId, int, int]) -> ArrayF64:
    config, zone, k, chunk_blocks = args
    return collect_position(config, zone, k, chunk_blocks=chunk_blocks)


def load_manifest(config: ExperimentConfig, out: Path) -> CollectionManifest | None:
    path = out / MANIFEST_FILE
    if not path.exists():
        return None
    manifest = read_json_document(path, CollectionManifest)
    require_matching_hash(manifest.config_hash, config, path)
    return manifest


def _entry_complete(entry: ManifestEntry | None, config: ExperimentConfig, out: Path) -> bool:
    return (
        entry is not None
        and entry.n_samples >= config.samples_per_position
        and (out / entry.csv_path).exists()
    )


def run_collection(
    config: ExperimentConfig, out: Path, *, workers: int = 1, chunk_blocks: int = 2000
) -> CollectionManifest:
    """
    Collect block-maximum samples for every (zone, training position).

    Resumes from an existing manifest in `out`: completed pairs are skipped. The manifest
    is rewritten after every pair so an interrupted run loses at most the pair in flight.
    """
    positions = config.training_positions()
    manifest = load_manifest(config, out) or CollectionManifest(
        config_hash=config_hash(config), master_seed=config.master_seed
    )

    pending = [
        (z, k)
        for z in config.zones
        for k in range(len(positions))
        if not _entry_complete(manifest.entry(z, k), config, out)
    ]
    done = len(config.zones) * len(positions) - len(pending)
    if done:
        logger.info("Resuming collection: %d pair(s) already complete", done)

    entries = {(e.zone, e.position_index): e for e in manifest.entries}
    tasks = [(config, z, k, chunk_blocks) for z, k in pending]
    for (zone, k), values in zip(pending, _run_tasks(_collect_task, tasks, workers), strict=True):
        name = samples_filename(zone, k)
        x, y = (float(c) for c in positions[k])
        write_samples_csv(
            out / name,
            values,
            {
                "zone": zone,
                "position_index": k,
                "x": repr(x),
                "y": repr(y),
                "seed": config.master_seed,
                "config_hash": manifest.config_hash,
            },
        )
        entries[(zone, k)] = ManifestEntry(
            zone=zone,
            position_index=k,
            position=(x, y),
            n_samples=int(values.size),
            csv_path=name,
            seed=config.master_seed,
        )
        ordered = tuple(entries[key] for key in sorted(entries))
        manifest = manifest.model_copy(update={"entries": ordered})
        write_json_document(out / MANIFEST_FILE, manifest)
        logger.info("Collected %d samples for zone %d position %d", values.size, zone, k)

    return manifest


def _fit_task(args: tuple[ExperimentConfig, Path, str, ZoneId, int]) -> FitEntry:
    config, out, csv_path, zone, k = args
    values, _ = read_samples_csv(out / csv_path)
    report = fit_gev(
        values,
        config.gev_learning_rate,
        max_iter=config.gev_max_iter,
        tol=config.gev_loglik_tol,
    )
    write_frame(out / fit_ccdf_filename(zone, k), fit_ccdf_frame(values, report.params))
    return FitEntry(
        zone=zone,
        position_index=k,
        report=report,
        ks_distance=ks_distance(values, report.params),
    )


def run_fits(config: ExperimentConfig, out: Path, *, workers: int = 1) -> FitsDocument:
    """
    Fit a GEV law to the samples of every (zone, training position) in the manifest.

    Writes fits.json and, per pair, the empirical and fitted CCDF of its samples.
    """
    manifest = load_manifest(config, out)
    if manifest is None:
        raise IncompleteDatasetError(f"No {MANIFEST_FILE} in {out}; run collection first")

    n_positions = len(config.training_positions())
    gaps = [
        (z, k)
        for z in config.zones
        for k in range(n_positions)
        if not _entry_complete(manifest.entry(z, k), config, out)
    ]
    if gaps:
        shown = ", ".join(f"(zone {z}, position {k})" for z, k in gaps[:10])
        raise IncompleteDatasetError(f"Collection incomplete for {len(gaps)} pair(s): {shown}")

    tasks = []
    for z in config.zones:
        for k in range(n_positions):
            entry = manifest.entry(z, k)
            assert entry is not None
            tasks.append((config, out, entry.csv_path, z, k))

    fits = list(_run_tasks(_fit_task, tasks, workers))
    for f in fits:
        if not f.report.converged:
            logger.warning(
                "GEV fit for zone %d position %d did not converge", f.zone, f.position_index
            )

    document = FitsDocument(config_hash=manifest.config_hash, entries=tuple(fits))
    write_json_document(out / FITS_FILE, document)
    return document


def run_training(config: ExperimentConfig, out: Path) -> ZoneModelBundle:
    path = out / FITS_FILE
    fits = read_json_document(path, FitsDocument)
    require_matching_hash(fits.config_hash, config, path)

    params = {(e.zone, e.position_index): e.report.params for e in fits.entries}
    models = build_zone_models(
        params,
        config.training_positions(),
        zones=config.zones,
        epsilon=config.epsilon,
        restarts=config.gpr_restarts,
    )
    bundle = ZoneModelBundle(
        config_hash=fits.config_hash, epsilon=config.epsilon, zones=tuple(models)
    )
    write_json_document(out / ZONE_MODELS_FILE, bundle)
    for model in models:
        frame = params_map_frame(model, config.area.half_width, config.epsilon)
        write_frame(out / params_map_filename(model.zone), frame)
    return bundle


def load_zone_models(config: ExperimentConfig, out: Path) -> dict[ZoneId, ZoneModel]:
    path = out / ZONE_MODELS_FILE
    bundle = read_json_document(path, ZoneModelBundle)
    require_matching_hash(bundle.config_hash, config, path)
    return {m.zone: m for m in bundle.zones}


HELDOUT_PURPOSE = "heldout"


def heldout_position(config: ExperimentConfig) -> tuple[float, float]:
    """Center of the lower-left cell of the training grid, away from every training node."""
    positions = config.training_positions()
    if len(positions) == 1:
        offset = config.area.half_width / 2.0
        return (offset, offset)
    spacing = float(positions[1, 0] - positions[0, 0])
    return (float(positions[0, 0]) + spacing / 2.0, float(positions[0, 1]) + spacing / 2.0)


def _heldout_task(args: tuple[ExperimentConfig, ZoneId, tuple[float, float]]) -> ArrayF64:
    config, zone, position = args
    rng = stream(config.master_seed, HELDOUT_PURPOSE, zone)
    return block_maxima(config, zone, position, config.samples_per_position, rng)


def run_heldout_check(
    config: ExperimentConfig,
    out: Path,
    *,
    position: tuple[float, float] | None = None,
    workers: int = 1,
) -> dict[ZoneId, float]:
    """
    Simulate fresh block maxima at a position off the training grid and compare them with
    the GEV law each zone model predicts there; writes ccdf_heldout_z<zone>.csv.

    Returns the KS distance per zone. A zone whose predicted zeta has no usable shape is
    skipped with a warning.
    """
    models = load_zone_models(config, out)
    at = position if position is not None else heldout_position(config)
    zones = sorted(models)
    fresh = _run_tasks(_heldout_task, [(config, z, at) for z in zones], workers)

    distances: dict[ZoneId, float] = {}
    for zone, values in zip(zones, fresh, strict=True):
        try:
            predicted = predicted_law(models[zone], at, config.epsilon)
        except InfeasibleChannelError as e:
            logger.warning("No held-out check for zone %d: %s", zone, e)
            continue
        write_frame(out / heldout_ccdf_filename(zone), heldout_ccdf_frame(values, predicted))
        distances[zone] = ks_distance(values, predicted)
        logger.info(
            "Zone %d held out at (%.1f, %.1f): KS distance %.4f",
            zone,
            at[0],
            at[1],
            distances[zone],
        )
    return distances


def run_offline_pipeline(
    config: ExperimentConfig, out: Path, *, workers: int = 1, chunk_blocks: int = 2000
) -> tuple[CollectionManifest, list[ZoneModel]]:
    """Collect, fit, train, then check one held-out position; every stage writes into `out`."""
    manifest = run_collection(config, out, workers=workers, chunk_blocks=chunk_blocks)
    run_fits(config, out, workers=workers)
    bundle = run_training(config, out)
    run_heldout_check(config, out, workers=workers)
    return manifest, list(bundle.zones)


# -----------------------------
# Online stage
# -----------------------------

SNAPSHOT_PURPOSE = "snapshot"
PLACE_PURPOSE = "place"
EVALUATE_PURPOSE = "evaluate"


def _distribution_index(distribution: Distribution) -> int:
    return list(Distribution).index(Distribution(distribution))


def snapshot_for(config: ExperimentConfig, distribution: Distribution) -> Fleet:
    """The VUE snapshot shared by every scheme under `distribution`."""
    rng = stream(config.master_seed, SNAPSHOT_PURPOSE, _distribution_index(distribution))
    return vue_snapshot(config, distribution, rng)


def load_placement(config: ExperimentConfig, out: Path, scheme: Scheme) -> PlacementDocument:
    path = out / placement_filename(scheme)
    document = read_json_document(path, PlacementDocument)
    require_matching_hash(document.config_hash, config, path)
    return document


def run_placement(
    config: ExperimentConfig, out: Path, scheme: Scheme, distribution: Distribution
) -> PlacementDocument:
    """
    Place the UAV for one scheme and write placement_<scheme>.json.

    Baselines reuse the levels of placement_proposed.json, so the proposed scheme must be
    placed first under the same distribution.
    """
    snapshot = snapshot_for(config, distribution)
    zone_models = load_zone_models(config, out) if (out / ZONE_MODELS_FILE).exists() else None

    proposed_levels: tuple[int, ...] | None = None
    if scheme != "proposed":
        if not (out / placement_filename("proposed")).exists():
            raise ConfigurationError(
                f"Baseline {scheme!r} needs {placement_filename('proposed')}; "
                "place the proposed scheme first"
            )
        proposed = load_placement(config, out, "proposed")
        if proposed.distribution != distribution:
            raise ConfigurationError(
                f"Proposed placement used distribution {proposed.distribution!s}, "
                f"not {distribution!s}"
            )
        proposed_levels = proposed.solution.levels

    rng = stream(config.master_seed, PLACE_PURPOSE, SCHEMES.index(scheme))
    solution = place_and_select(
        zone_models, snapshot, config, scheme, rng=rng, proposed_levels=proposed_levels
    )
    document = PlacementDocument(
        config_hash=config_hash(config),
        distribution=distribution,
        solution=solution,
        vues=tuple(vue_records(snapshot, config)),
    )
    write_json_document(out / placement_filename(scheme), document)
    return document


def run_evaluation(
    config: ExperimentConfig,
    out: Path,
    scheme: Scheme,
    distribution: Distribution | None = None,
) -> EvaluationReport:
    """
    Simulate the placed scheme and write evaluation_<scheme>.json.

    When `distribution` is given it must be the one the placement was made under.
    """
    placement = load_placement(config, out, scheme)
    if distribution is not None and placement.distribution != distribution:
        raise ConfigurationError(
            f"{placement_filename(scheme)} was placed under distribution "
            f"{placement.distribution!s}, not {distribution!s}"
        )
    rng = stream(
        config.master_seed,
        EVALUATE_PURPOSE,
        SCHEMES.index(scheme),
        _distribution_index(placement.distribution),
    )
    report = evaluate_scheme(
        placement.solution,
        fleet_from_records(placement.vues),
        config,
        config.eval_blocks,
        rng,
        distribution=placement.distribution,
    )
    write_json_document(out / evaluation_filename(scheme), report)
    return report


def run_experiment(
    config: ExperimentConfig,
    out: Path,
    distribution: Distribution,
    *,
    workers: int = 1,
    chunk_blocks: int = 2000,
) -> list[EvaluationReport]:
    """Offline pipeline, then placement and evaluation of every scheme, then the report."""
    run_offline_pipeline(config, out, workers=workers, chunk_blocks=chunk_blocks)
    reports = []
    for scheme in SCHEMES:
        run_placement(config, out, scheme, distribution)
        reports.append(run_evaluation(config, out, scheme, distribution))
    write_report(reports, out)
    return reports
