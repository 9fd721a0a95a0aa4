from __future__ import annotations

from pathlib import Path

import pandas as pd
import pytest

from urllc_uav.core.errors import (
    ConfigurationError,
    IncompleteDatasetError,
    ManifestMismatchError,
)
from urllc_uav.harness.io import (
    COMPARISON_FILE,
    FITS_FILE,
    MANIFEST_FILE,
    ZONE_MODELS_FILE,
    fit_ccdf_filename,
    heldout_ccdf_filename,
    params_map_filename,
    placement_filename,
    read_samples_csv,
    samples_filename,
)
from urllc_uav.harness.pipeline import (
    heldout_position,
    load_zone_models,
    run_collection,
    run_evaluation,
    run_experiment,
    run_fits,
    run_heldout_check,
    run_offline_pipeline,
    run_placement,
)
from urllc_uav.harness.report import MAP_GRID_SIDE, PARAMS_MAP_COLUMNS
from urllc_uav.scenario.experiment import ExperimentConfig
from urllc_uav.scenario.mobility import Distribution


def test_offline_pipeline_artifacts(tmp_path: Path, tiny_config: ExperimentConfig) -> None:
    manifest, models = run_offline_pipeline(tiny_config, tmp_path, chunk_blocks=25)

    assert len(manifest.entries) == 6 * 4
    assert [m.zone for m in models] == [1, 2, 3, 4, 5, 6]
    for name in (MANIFEST_FILE, FITS_FILE, ZONE_MODELS_FILE):
        assert (tmp_path / name).exists()

    values, metadata = read_samples_csv(tmp_path / samples_filename(3, 1))
    assert values.size == tiny_config.samples_per_position
    assert metadata["zone"] == "3" and metadata["position_index"] == "1"
    assert set(load_zone_models(tiny_config, tmp_path)) == {1, 2, 3, 4, 5, 6}

    fit_ccdf = pd.read_csv(tmp_path / fit_ccdf_filename(3, 1))
    assert fit_ccdf.columns.tolist() == ["t", "empirical", "fitted"]
    assert len(fit_ccdf) == len(set(values.tolist()))

    params_map = pd.read_csv(tmp_path / params_map_filename(6))
    assert params_map.columns.tolist() == list(PARAMS_MAP_COLUMNS)
    assert len(params_map) == MAP_GRID_SIDE**2
    assert (params_map["sigma"] > 0).all()

    heldout_files = sorted(tmp_path.glob("ccdf_heldout_z*.csv"))
    assert heldout_files
    heldout = pd.read_csv(heldout_files[0])
    assert heldout.columns.tolist() == ["t", "simulated", "predicted"]
    assert heldout["simulated"].iloc[-1] == 0.0


def test_offline_pipeline_is_deterministic_across_workers(
    tmp_path: Path, tiny_config: ExperimentConfig
) -> None:
    run_offline_pipeline(tiny_config, tmp_path / "serial", workers=1, chunk_blocks=25)
    run_offline_pipeline(tiny_config, tmp_path / "pooled", workers=2, chunk_blocks=25)

    for name in (ZONE_MODELS_FILE, samples_filename(6, 3)):
        serial = (tmp_path / "serial" / name).read_bytes()
        assert serial == (tmp_path / "pooled" / name).read_bytes()


def test_collection_resumes_missing_pairs(tmp_path: Path, tiny_config: ExperimentConfig) -> None:
    run_collection(tiny_config, tmp_path, chunk_blocks=25)
    target = tmp_path / samples_filename(2, 0)
    untouched = tmp_path / samples_filename(4, 2)
    before = target.read_bytes()
    stamp = untouched.stat().st_mtime_ns

    target.unlink()
    manifest = run_collection(tiny_config, tmp_path, chunk_blocks=25)

    assert target.read_bytes() == before
    assert untouched.stat().st_mtime_ns == stamp
    assert len(manifest.entries) == 24


def test_collection_refuses_another_config(tmp_path: Path, tiny_config: ExperimentConfig) -> None:
    one_zone = tiny_config.model_copy(update={"collect_zones": (1,)})
    run_collection(one_zone, tmp_path, chunk_blocks=25)
    other = one_zone.model_copy(update={"master_seed": 8})
    with pytest.raises(ManifestMismatchError):
        run_collection(other, tmp_path, chunk_blocks=25)


def test_fits_need_a_collection(tmp_path: Path, tiny_config: ExperimentConfig) -> None:
    with pytest.raises(IncompleteDatasetError):
        run_fits(tiny_config, tmp_path)


def test_fits_need_every_pair(tmp_path: Path, tiny_config: ExperimentConfig) -> None:
    run_collection(tiny_config, tmp_path, chunk_blocks=25)
    (tmp_path / samples_filename(5, 3)).unlink()
    with pytest.raises(IncompleteDatasetError, match=r"\(zone 5, position 3\)"):
        run_fits(tiny_config, tmp_path)


def test_baselines_need_the_proposed_placement(
    tmp_path: Path, tiny_config: ExperimentConfig
) -> None:
    with pytest.raises(ConfigurationError, match="place the proposed scheme first"):
        run_placement(tiny_config, tmp_path, "fixed", Distribution.EVEN)


def test_placement_and_evaluation_stages(tmp_path: Path, tiny_config: ExperimentConfig) -> None:
    run_offline_pipeline(tiny_config, tmp_path, chunk_blocks=25)
    proposed = run_placement(tiny_config, tmp_path, "proposed", Distribution.BIASED)
    assert (tmp_path / placement_filename("proposed")).exists()
    assert len(proposed.vues) == tiny_config.n_vues

    fixed = run_placement(tiny_config, tmp_path, "fixed", Distribution.BIASED)
    # baselines see the same VUE snapshot as the proposed scheme
    assert fixed.vues == proposed.vues
    assert fixed.solution.e_u == (0.0, 0.0)

    with pytest.raises(ConfigurationError, match="distribution"):
        run_placement(tiny_config, tmp_path, "random", Distribution.EVEN)

    with pytest.raises(ConfigurationError, match="distribution"):
        run_evaluation(tiny_config, tmp_path, "fixed", Distribution.EVEN)

    report = run_evaluation(tiny_config, tmp_path, "fixed", Distribution.BIASED)
    assert report.distribution == Distribution.BIASED
    assert report.n_blocks == tiny_config.eval_blocks
    assert run_evaluation(tiny_config, tmp_path, "fixed") == report


def test_run_experiment_writes_comparison(tmp_path: Path, tiny_config: ExperimentConfig) -> None:
    reports = run_experiment(tiny_config, tmp_path, Distribution.EVEN, chunk_blocks=25)

    assert [r.scheme for r in reports] == ["proposed", "fixed", "random"]
    comparison = pd.read_csv(tmp_path / COMPARISON_FILE)
    assert comparison["scheme"].tolist() == ["proposed", "fixed", "random"]
    # baselines stream at the rounded mean proposed level
    mean_level = reports[0].mean_level
    assert reports[1].mean_level == reports[2].mean_level == int(mean_level + 0.5)


def test_heldout_position_is_off_the_training_grid(tiny_config: ExperimentConfig) -> None:
    # 2x2 grid over [-120, 120]^2: the lower-left cell is the whole area
    assert heldout_position(tiny_config) == (0.0, 0.0)
    desk = tiny_config.model_copy(update={"n_training_positions": 25})
    assert heldout_position(desk) == (-90.0, -90.0)
    single = tiny_config.model_copy(update={"n_training_positions": 1})
    assert heldout_position(single) == (60.0, 60.0)


def test_heldout_check_writes_one_file_per_checked_zone(
    tmp_path: Path, tiny_config: ExperimentConfig
) -> None:
    run_offline_pipeline(tiny_config, tmp_path, chunk_blocks=25)
    for name in tmp_path.glob("ccdf_heldout_z*.csv"):
        name.unlink()

    distances = run_heldout_check(tiny_config, tmp_path, position=(30.0, -30.0))
    assert distances
    assert set(distances) <= {1, 2, 3, 4, 5, 6}
    for zone, d in distances.items():
        assert 0.0 <= d <= 1.0
        frame = pd.read_csv(tmp_path / heldout_ccdf_filename(zone))
        assert len(frame) == len(frame["t"].unique())
