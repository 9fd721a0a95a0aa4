from __future__ import annotations

import logging
from pathlib import Path

from collections.abc import Callable

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from urllc_uav.core.errors import ConfigurationError, ManifestMismatchError
from urllc_uav.evt.gev import zeta_inverse
from urllc_uav.evt.schema import GevParams
from urllc_uav.gpr.schema import ZoneModel
from urllc_uav.harness.io import (
    COMPARISON_FILE,
    ccdf_filename,
    evaluation_filename,
    write_json_document,
)
from urllc_uav.harness.report import (
    COMPARISON_COLUMNS,
    PARAMS_MAP_COLUMNS,
    comparison_frame,
    fit_ccdf_frame,
    heldout_ccdf_frame,
    load_reports,
    params_map_frame,
    write_report,
)
from urllc_uav.harness.schema import CcdfPoint, EvaluationReport
from urllc_uav.scenario.experiment import config_hash, preset_config
from urllc_uav.scenario.mobility import Distribution

DESK_HASH = config_hash(preset_config("desk"))


def make_report(
    scheme: str, q999: float, distribution: Distribution = Distribution.EVEN
) -> EvaluationReport:
    return EvaluationReport(
        config_hash=DESK_HASH,
        scheme=scheme,  # type: ignore[arg-type]
        distribution=distribution,
        position=(1.0, -2.0),
        n_blocks=10,
        ccdf=(CcdfPoint(t=0.0, ccdf=1.0), CcdfPoint(t=q999, ccdf=0.0)),
        quantiles={"0.5": q999 / 4, "0.9": q999 / 2, "0.99": q999 / 1.5, "0.999": q999},
        mean_level=2.5,
        violation_freq=0.001,
        per_vue_violation_freq=(0.0, 0.002),
    )


def test_comparison_frame_has_one_row_per_scheme() -> None:
    frame = comparison_frame([make_report("proposed", 1.0), make_report("fixed", 2.0)])
    assert list(frame.columns) == list(COMPARISON_COLUMNS)
    assert frame["scheme"].tolist() == ["proposed", "fixed"]
    assert frame["q0.999"].tolist() == [1.0, 2.0]
    assert frame["q0.5"].tolist() == [0.25, 0.5]


def test_write_report_files(tmp_path: Path, caplog: pytest.LogCaptureFixture) -> None:
    reports = [make_report("proposed", 1.0), make_report("fixed", 2.0), make_report("random", 4.0)]
    with caplog.at_level(logging.INFO, logger="urllc_uav.harness.report"):
        write_report(reports, tmp_path)

    comparison = pd.read_csv(tmp_path / COMPARISON_FILE)
    assert len(comparison) == 3
    ccdf = pd.read_csv(tmp_path / ccdf_filename("random"))
    assert ccdf.columns.tolist() == ["t", "ccdf"]
    assert ccdf["t"].tolist() == [0.0, 4.0]
    assert "50.0% lower than fixed" in caplog.text
    assert "75.0% lower than random" in caplog.text


def test_load_reports_in_scheme_order(tmp_path: Path) -> None:
    write_json_document(tmp_path / evaluation_filename("random"), make_report("random", 3.0))
    write_json_document(tmp_path / evaluation_filename("proposed"), make_report("proposed", 1.0))
    assert [r.scheme for r in load_reports(tmp_path)] == ["proposed", "random"]


def test_load_reports_warns_on_mixed_distributions(
    tmp_path: Path, caplog: pytest.LogCaptureFixture
) -> None:
    write_json_document(tmp_path / evaluation_filename("proposed"), make_report("proposed", 1.0))
    biased = make_report("fixed", 2.0, Distribution.BIASED)
    write_json_document(tmp_path / evaluation_filename("fixed"), biased)
    with caplog.at_level(logging.WARNING):
        load_reports(tmp_path)
    assert "different distributions" in caplog.text


def test_load_reports_needs_at_least_one(tmp_path: Path) -> None:
    with pytest.raises(ConfigurationError):
        load_reports(tmp_path)


def test_load_reports_checks_the_config(tmp_path: Path) -> None:
    write_json_document(tmp_path / evaluation_filename("proposed"), make_report("proposed", 1.0))
    assert len(load_reports(tmp_path, preset_config("desk"))) == 1
    with pytest.raises(ManifestMismatchError, match=evaluation_filename("proposed")):
        load_reports(tmp_path, preset_config("full"))


def test_fit_ccdf_frame_tracks_the_fitted_law(rng: np.random.Generator) -> None:
    params = GevParams(mu=4e-3, sigma=5e-4, xi=0.1)
    samples = stats.genextreme.rvs(c=-0.1, loc=4e-3, scale=5e-4, size=5000, random_state=rng)
    frame = fit_ccdf_frame(samples, params)

    assert frame.columns.tolist() == ["t", "empirical", "fitted"]
    assert len(frame) == len(np.unique(samples))
    assert np.all(np.diff(frame["t"]) > 0)
    assert frame["empirical"].iloc[-1] == 0.0
    assert np.all(np.diff(frame["fitted"]) <= 0)
    assert float(np.max(np.abs(frame["empirical"] - frame["fitted"]))) < 0.03


def test_heldout_frame_counts_ties_once() -> None:
    frame = heldout_ccdf_frame([1.0, 1.0, 2.0, 3.0], GevParams(mu=1.5, sigma=0.5, xi=0.0))
    assert frame.columns.tolist() == ["t", "simulated", "predicted"]
    assert frame["t"].tolist() == [1.0, 2.0, 3.0]
    assert frame["simulated"].tolist() == [0.5, 0.25, 0.0]
    assert frame["predicted"].iloc[0] == pytest.approx(1.0 - np.exp(-np.exp(1.0)))


def test_ccdf_frames_need_samples() -> None:
    with pytest.raises(ConfigurationError):
        heldout_ccdf_frame([], GevParams(mu=1.0, sigma=0.5, xi=0.0))


def test_params_map_covers_the_area(make_zone: Callable[..., ZoneModel]) -> None:
    frame = params_map_frame(make_zone(3), 120.0, 1e-3, side=5)

    assert frame.columns.tolist() == list(PARAMS_MAP_COLUMNS)
    assert len(frame) == 25
    assert frame["x"].min() == -120.0 and frame["y"].max() == 120.0
    assert np.allclose(frame["mu"], 4e-3, rtol=1e-9)
    assert np.allclose(frame["sigma"], 5e-4, rtol=1e-9)
    assert np.allclose(frame["xi"], zeta_inverse(4.0, 1e-3), rtol=1e-9)


def test_params_map_marks_clamped_zeta(make_zone: Callable[..., ZoneModel]) -> None:
    frame = params_map_frame(make_zone(1, zeta=-1.0), 120.0, 1e-3, side=3)
    assert frame["xi"].isna().all()
    assert frame["zeta"].min() > 0
