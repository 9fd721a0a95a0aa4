from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from urllc_uav.core.errors import ConfigurationError, InfeasibleChannelError
from urllc_uav.evt.gev import gev_ccdf
from urllc_uav.evt.schema import GevParams
from urllc_uav.gpr.schema import ZoneModel
from urllc_uav.gpr.train import training_grid
from urllc_uav.harness.evaluation import empirical_ccdf
from urllc_uav.harness.io import (
    COMPARISON_FILE,
    ccdf_filename,
    evaluation_filename,
    read_json_document,
    require_matching_hash,
    write_frame,
)
from urllc_uav.harness.schema import SCHEMES, EvaluationReport
from urllc_uav.placement.payload import shape_from_zeta, zone_field
from urllc_uav.scenario.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

ArrayF64 = NDArray[np.float64]

COMPARISON_COLUMNS = ("scheme", "q0.5", "q0.9", "q0.99", "q0.999", "mean_level", "violation_freq")
PARAMS_MAP_COLUMNS = ("x", "y", "mu", "sigma", "zeta", "xi")
MAP_GRID_SIDE = 49


def comparison_frame(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    """One row per scheme, in the order given."""
    rows = [
        {
            "scheme": r.scheme,
            "q0.5": r.quantiles["0.5"],
            "q0.9": r.quantiles["0.9"],
            "q0.99": r.quantiles["0.99"],
            "q0.999": r.quantiles["0.999"],
            "mean_level": r.mean_level,
            "violation_freq": r.violation_freq,
        }
        for r in reports
    ]
    return pd.DataFrame(rows, columns=list(COMPARISON_COLUMNS))


def ccdf_frame(report: EvaluationReport) -> pd.DataFrame:
    return pd.DataFrame(
        {"t": [p.t for p in report.ccdf], "ccdf": [p.ccdf for p in report.ccdf]},
        columns=["t", "ccdf"],
    )


def _ccdf_support(samples: ArrayLike) -> ArrayF64:
    data = np.asarray(samples, dtype=float).ravel()
    if data.size == 0:
        raise ConfigurationError("A CCDF comparison needs at least one sample")
    return np.unique(data)


def fit_ccdf_frame(samples: ArrayLike, params: GevParams) -> pd.DataFrame:
    """Empirical and fitted CCDF of one sample set at each distinct sample value."""
    t = _ccdf_support(samples)
    return pd.DataFrame(
        {"t": t, "empirical": empirical_ccdf(samples, t), "fitted": gev_ccdf(t, params)},
        columns=["t", "empirical", "fitted"],
    )


def heldout_ccdf_frame(simulated: ArrayLike, predicted: GevParams) -> pd.DataFrame:
    """CCDF of freshly simulated block maxima against the law the zone model predicts."""
    t = _ccdf_support(simulated)
    return pd.DataFrame(
        {"t": t, "simulated": empirical_ccdf(simulated, t), "predicted": gev_ccdf(t, predicted)},
        columns=["t", "simulated", "predicted"],
    )


def predicted_law(model: ZoneModel, position: ArrayLike, epsilon: float) -> GevParams:
    field = zone_field(model, position, with_grad=False)
    return GevParams(mu=field.mu, sigma=field.sigma, xi=shape_from_zeta(field.zeta, epsilon))


def params_map_frame(
    model: ZoneModel, half_width: float, epsilon: float, side: int = MAP_GRID_SIDE
) -> pd.DataFrame:
    """
    Predicted (mu, sigma, zeta, xi) of one zone on a side x side grid over the area.

    sigma and zeta are the clamped values the placement uses; xi is NaN where zeta has no
    usable shape.
    """
    rows = []
    for x, y in training_grid(half_width, side):
        field = zone_field(model, (x, y), with_grad=False)
        try:
            xi = shape_from_zeta(field.zeta, epsilon)
        except InfeasibleChannelError:
            xi = float("nan")
        rows.append((float(x), float(y), field.mu, field.sigma, field.zeta, xi))
    return pd.DataFrame(rows, columns=list(PARAMS_MAP_COLUMNS))

def load_reports(out: Path, config: ExperimentConfig | None = None) -> list[EvaluationReport]:
    """
    Every evaluation_<scheme>.json present in `out`, in scheme order.

    With `config`, each report must have been produced under that config.
    """
    reports = []
    for s in SCHEMES:
        path = out / evaluation_filename(s)
        if not path.exists():
            continue
        report = read_json_document(path, EvaluationReport)
        if config is not None:
            require_matching_hash(report.config_hash, config, path)
        reports.append(report)
    if not reports:
        raise ConfigurationError(f"No evaluation reports found in {out}")

    distributions = {r.distribution for r in reports}
    if len(distributions) > 1:
        logger.warning("Comparing reports from different distributions: %s", sorted(distributions))
    return reports


def write_report(reports: Sequence[EvaluationReport], out: Path) -> pd.DataFrame:
    """Write comparison.csv plus one ccdf_<scheme>.csv per report; returns the comparison."""
    frame = comparison_frame(reports)
    write_frame(out / COMPARISON_FILE, frame)
    for r in reports:
        write_frame(out / ccdf_filename(r.scheme), ccdf_frame(r))

    by_scheme = {r.scheme: r.quantiles["0.999"] for r in reports}
    proposed = by_scheme.get("proposed")
    if proposed is not None:
        for scheme in ("fixed", "random"):
            base = by_scheme.get(scheme)
            if base:
                logger.info(
                    "proposed 0.999-quantile is %.1f%% lower than %s",
                    100.0 * (base - proposed) / base,
                    scheme,
                )
    return frame
