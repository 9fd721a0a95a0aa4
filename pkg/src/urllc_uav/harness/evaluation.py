from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from urllc_uav.channel.model import channel_gain, draw_fading, slot_delay, uav_point
from urllc_uav.core.errors import ConfigurationError, DomainError
from urllc_uav.gpr.schema import ZoneModel
from urllc_uav.harness.schema import CcdfPoint, EvaluationReport, Scheme, VueRecord
from urllc_uav.placement.payload import effective_params
from urllc_uav.placement.schema import PlacementSolution, VueContext
from urllc_uav.placement.solver import solve_placement
from urllc_uav.scenario.area import ZoneId, zones_of
from urllc_uav.scenario.experiment import ExperimentConfig, config_hash
from urllc_uav.scenario.mobility import Distribution, Fleet, advance_fleet, spawn_fleet

logger = logging.getLogger(__name__)

ArrayF64 = NDArray[np.float64]

REPORT_QUANTILES = (0.5, 0.9, 0.99, 0.999)
EVAL_CHUNK_ROWS = 20_000
CCDF_POINTS = 400


def empirical_quantile(samples: ArrayLike, q: float) -> float:
    """The ceil(q n)-th smallest sample."""
    data = np.asarray(samples, dtype=float).ravel()
    if data.size == 0:
        raise DomainError("empirical_quantile needs at least one sample")
    if not 0.0 < q < 1.0:
        raise DomainError(f"Quantile level must lie in (0, 1); got {q}")
    k = min(max(math.ceil(round(q * data.size, 9)), 1), data.size)
    return float(np.partition(data, k - 1)[k - 1])


def empirical_ccdf(samples: ArrayLike, t: ArrayLike) -> ArrayF64:
    """Fraction of samples strictly greater than each t."""
    data = np.sort(np.asarray(samples, dtype=float).ravel())
    if data.size == 0:
        raise DomainError("empirical_ccdf needs at least one sample")
    at_or_below = np.searchsorted(data, np.asarray(t, dtype=float), side="right")
    result: ArrayF64 = 1.0 - at_or_below / data.size
    return result


def lag1_autocorrelation(samples: ArrayLike) -> float:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("lag-1 autocorrelation needs at least two samples")
    x = x - x.mean()
    denom = float(x @ x)
    return float(x[:-1] @ x[1:]) / denom if denom > 0 else 0.0


def ccdf_points(samples: ArrayLike) -> list[CcdfPoint]:
    """CCDF at t = 0 and at order statistics spaced geometrically toward the maximum."""
    data = np.sort(np.asarray(samples, dtype=float).ravel())
    n = data.size
    ranks = np.unique(np.rint(n - np.geomspace(n, 1, CCDF_POINTS)).astype(np.int64))
    t = np.concatenate([[0.0], data[np.clip(ranks, 0, n - 1)], [data[-1]]])
    t = np.unique(t)
    values = empirical_ccdf(data, t)
    return [CcdfPoint(t=float(a), ccdf=float(b)) for a, b in zip(t, values, strict=True)]


# -----------------------------
# VUE snapshot
# -----------------------------


def vue_snapshot(
    config: ExperimentConfig, distribution: Distribution, rng: np.random.Generator
) -> Fleet:
    """V VUEs spawned per `distribution`, then moved for one warm-up block of S0 slots."""
    fleet = spawn_fleet(config, distribution, rng)
    for _ in range(config.slots_per_block):
        fleet = advance_fleet(fleet, config.area, rng, mobility=config.mobility)
    return fleet


def vue_contexts(fleet: Fleet, config: ExperimentConfig) -> list[VueContext]:
    zones = zones_of(fleet.positions, config.area)
    return [VueContext(vue_id=i, zone=int(z), a=config.a_ratio) for i, z in enumerate(zones)]


def vue_records(fleet: Fleet, config: ExperimentConfig) -> list[VueRecord]:
    zones = zones_of(fleet.positions, config.area)
    return [
        VueRecord(
            vue_id=i,
            x=float(p[0]),
            y=float(p[1]),
            heading=int(h),
            speed=float(s),
            zone=int(z),
        )
        for i, (p, h, s, z) in enumerate(
            zip(fleet.positions, fleet.headings, fleet.speeds, zones, strict=True)
        )
    ]


def fleet_from_records(records: Sequence[VueRecord]) -> Fleet:
    return Fleet(
        positions=np.array([(r.x, r.y) for r in records], dtype=float).reshape(-1, 2),
        headings=np.array([r.heading for r in records], dtype=np.int8),
        speeds=np.array([r.speed for r in records], dtype=float),
    )


# -----------------------------
# Placement per scheme
# -----------------------------


def baseline_level(proposed_levels: Sequence[int], n_levels: int) -> int:
    """Rounded (half up) mean of the proposed levels."""
    if not proposed_levels:
        raise ConfigurationError("Baselines need the levels of the proposed placement")
    level = math.floor(float(np.mean(proposed_levels)) + 0.5)
    return min(max(level, 1), n_levels)


def _baseline_solution(
    scheme: Scheme,
    e_u: tuple[float, float],
    contexts: Sequence[VueContext],
    config: ExperimentConfig,
    zone_models: Mapping[ZoneId, ZoneModel] | None,
    level: int,
) -> PlacementSolution:
    bits = config.resolutions[level - 1].bits
    b_star: tuple[float, ...] = ()
    feasible_levels = tuple(True for _ in contexts)
    clamps = 0
    if zone_models is not None:
        params = effective_params(zone_models, e_u, contexts)
        den = params.denominator
        b = np.where(den > 0, np.array([c.a for c in contexts]) / np.where(den > 0, den, 1.0), 0.0)
        b_star = tuple(float(v) for v in b)
        feasible_levels = tuple(bool(v >= bits) for v in b)
        clamps = params.clamps

    return PlacementSolution(
        scheme=scheme,
        e_u=e_u,
        altitude=config.area.uav_altitude,
        b_star=b_star,
        levels=tuple(level for _ in contexts),
        feasible_levels=feasible_levels,
        objective=float(sum(b_star)),
        clamps=clamps,
        feasible=bool(b_star) and all(b >= config.a1_bits for b in b_star),
    )


def place_and_select(
    zone_models: Mapping[ZoneId, ZoneModel] | None,
    snapshot: Fleet,
    config: ExperimentConfig,
    scheme: Scheme,
    *,
    rng: np.random.Generator | None = None,
    proposed_levels: Sequence[int] | None = None,
) -> PlacementSolution:
    """
    UAV position and per-VUE levels under one scheme.

    `proposed` runs the placement solver. `fixed` hovers at (0, 0) and `random` at a
    uniform point of the area; both give every VUE the rounded mean proposed level.
    """
    contexts = vue_contexts(snapshot, config)

    if scheme == "proposed":
        if zone_models is None:
            raise ConfigurationError("The proposed scheme needs trained zone models")
        return solve_placement(zone_models, contexts, config)

    level = baseline_level(proposed_levels or (), len(config.resolutions))
    if scheme == "fixed":
        e_u = (0.0, 0.0)
    elif scheme == "random":
        if rng is None:
            raise ConfigurationError("The random scheme needs a random generator")
        hw = config.area.half_width
        x, y = rng.uniform(-hw, hw, size=2)
        e_u = (float(x), float(y))
    else:
        raise ConfigurationError(f"Unknown scheme {scheme!r}")

    logger.info("%s baseline at (%.3f, %.3f), level %d for all VUEs", scheme, *e_u, level)
    return _baseline_solution(scheme, e_u, contexts, config, zone_models, level)


# -----------------------------
# Evaluation
# -----------------------------


def simulate_delay_maxima(
    solution: PlacementSolution,
    snapshot: Fleet,
    config: ExperimentConfig,
    n_blocks: int,
    rng: np.random.Generator,
) -> ArrayF64:
    """
    (n_blocks, V) block maxima of the actual transmission delay A_l V / rate.

    Every block restarts the VUEs from the snapshot with fresh mobility and fading. Blocks
    containing an infinite delay are dropped and replaced.
    """
    n_vues = len(snapshot)
    if len(solution.levels) != n_vues:
        raise ConfigurationError(
            f"Solution has levels for {len(solution.levels)} VUEs, snapshot has {n_vues}"
        )
    bits = config.resolution_bits[np.asarray(solution.levels, dtype=np.int64) - 1]
    uav = uav_point(solution.e_u, solution.altitude)
    per_chunk = max(1, EVAL_CHUNK_ROWS // n_vues)

    blocks: list[ArrayF64] = []
    collected = 0
    while collected < n_blocks:
        c = min(per_chunk, n_blocks - collected)
        fleet = snapshot.tile(c)
        a = np.tile(bits, c)
        maxima = np.zeros(c * n_vues)
        for slot in range(config.slots_per_block):
            fading = draw_fading(config.channel, rng, c * n_vues)
            h = channel_gain(uav, fleet.positions, config.channel, fading)
            maxima = np.maximum(maxima, slot_delay(a, config.n_vues, h, config))
            if slot + 1 < config.slots_per_block:
                fleet = advance_fleet(fleet, config.area, rng, mobility=config.mobility)

        chunk = maxima.reshape(c, n_vues)
        finite = np.all(np.isfinite(chunk), axis=1)
        if not finite.all():
            logger.warning("Dropping %d evaluation block(s) with infinite delay", (~finite).sum())
        blocks.append(chunk[finite])
        collected += int(finite.sum())

    return np.concatenate(blocks)[:n_blocks]


def evaluate_scheme(
    solution: PlacementSolution,
    snapshot: Fleet,
    config: ExperimentConfig,
    n_blocks: int,
    rng: np.random.Generator,
    *,
    distribution: Distribution,
) -> EvaluationReport:
    maxima = simulate_delay_maxima(solution, snapshot, config, n_blocks, rng)
    samples = maxima.ravel()
    violations = maxima > config.delay_threshold_s

    report = EvaluationReport(
        config_hash=config_hash(config),
        scheme=solution.scheme,  # type: ignore[arg-type]
        distribution=distribution,
        position=solution.e_u,
        n_blocks=n_blocks,
        ccdf=tuple(ccdf_points(samples)),
        quantiles={f"{q:g}": empirical_quantile(samples, q) for q in REPORT_QUANTILES},
        mean_level=solution.mean_level,
        violation_freq=float(violations.mean()),
        per_vue_violation_freq=tuple(float(v) for v in violations.mean(axis=0)),
    )
    logger.info(
        "%s: q0.999=%.6g s, violation frequency %.3g",
        solution.scheme,
        report.quantiles["0.999"],
        report.violation_freq,
    )
    return report

