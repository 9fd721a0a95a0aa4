from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from urllc_uav.core.errors import ConfigurationError, DomainError
from urllc_uav.gpr.schema import ZoneModel
from urllc_uav.harness.evaluation import (
    REPORT_QUANTILES,
    baseline_level,
    ccdf_points,
    empirical_ccdf,
    empirical_quantile,
    evaluate_scheme,
    fleet_from_records,
    lag1_autocorrelation,
    place_and_select,
    simulate_delay_maxima,
    vue_contexts,
    vue_records,
    vue_snapshot,
)
from urllc_uav.scenario.area import on_road, zones_of
from urllc_uav.scenario.experiment import ExperimentConfig, config_hash
from urllc_uav.scenario.mobility import Distribution, Fleet


def test_empirical_quantile_takes_ceil_rank() -> None:
    data = np.arange(1, 1001, dtype=float)
    assert empirical_quantile(data, 0.999) == 999.0
    assert empirical_quantile(data, 0.5) == 500.0
    assert empirical_quantile(data, 0.9999999) == 1000.0
    assert empirical_quantile(data, 1e-9) == 1.0


def test_empirical_quantile_matches_inverted_cdf(rng: np.random.Generator) -> None:
    data = rng.exponential(size=777)
    for q in rng.uniform(0.001, 0.999, size=50):
        expected = np.quantile(data, q, method="inverted_cdf")
        assert empirical_quantile(data, q) == expected


@pytest.mark.parametrize("q", [0.0, 1.0, 1.5])
def test_empirical_quantile_rejects_level(q: float) -> None:
    with pytest.raises(DomainError):
        empirical_quantile([1.0, 2.0], q)


def test_empirical_quantile_rejects_empty() -> None:
    with pytest.raises(DomainError):
        empirical_quantile([], 0.5)


def test_empirical_ccdf_counts_strictly_greater() -> None:
    data = [1.0, 2.0, 2.0, 3.0]
    assert empirical_ccdf(data, [0.0, 1.0, 2.0, 2.5, 3.0]).tolist() == [1.0, 0.75, 0.25, 0.25, 0.0]


def test_ccdf_points_cover_zero_to_maximum(rng: np.random.Generator) -> None:
    data = rng.lognormal(-5.0, 0.4, size=10_000)
    points = ccdf_points(data)
    t = np.array([p.t for p in points])
    ccdf = np.array([p.ccdf for p in points])

    assert (t[0], ccdf[0]) == (0.0, 1.0)
    assert (t[-1], ccdf[-1]) == (data.max(), 0.0)
    assert np.all(np.diff(t) > 0)
    assert np.all(np.diff(ccdf) <= 0)
    assert len(points) <= 402
    # geometric spacing reaches deep into the tail
    assert ccdf[-2] <= 1e-3


def test_lag1_autocorrelation(rng: np.random.Generator) -> None:
    assert abs(lag1_autocorrelation(rng.normal(size=5000))) < 0.05

    ar = np.zeros(5000)
    noise = rng.normal(size=5000)
    for i in range(1, 5000):
        ar[i] = 0.8 * ar[i - 1] + noise[i]
    assert lag1_autocorrelation(ar) == pytest.approx(0.8, abs=0.05)
    assert lag1_autocorrelation(np.ones(10)) == 0.0


@pytest.mark.parametrize(
    ("levels", "expected"),
    [([1, 2], 2), ([1, 1, 2], 1), ([4, 4, 4], 4), ([2, 3, 3, 4], 3)],
)
def test_baseline_level_rounds_half_up(levels: list[int], expected: int) -> None:
    assert baseline_level(levels, 4) == expected


def test_baseline_level_needs_proposed_levels() -> None:
    with pytest.raises(ConfigurationError):
        baseline_level([], 4)


@pytest.fixture()
def snapshot(tiny_config: ExperimentConfig) -> Fleet:
    return vue_snapshot(tiny_config, Distribution.EVEN, np.random.default_rng(4))


@pytest.fixture()
def zone_models(make_zone: Callable[..., ZoneModel]) -> dict[int, ZoneModel]:
    return {z: make_zone(z) for z in range(1, 7)}


def test_snapshot_vues_are_on_roads(tiny_config: ExperimentConfig, snapshot: Fleet) -> None:
    assert len(snapshot) == tiny_config.n_vues
    assert np.all(on_road(snapshot.positions, tiny_config.area))


def test_vue_records_round_trip_the_fleet(tiny_config: ExperimentConfig, snapshot: Fleet) -> None:
    records = vue_records(snapshot, tiny_config)
    back = fleet_from_records(records)
    assert np.array_equal(back.positions, snapshot.positions)
    assert np.array_equal(back.headings, snapshot.headings)
    assert np.array_equal(back.speeds, snapshot.speeds)
    assert [r.zone for r in records] == zones_of(snapshot.positions, tiny_config.area).tolist()


def test_vue_contexts_share_the_payload_ratio(
    tiny_config: ExperimentConfig, snapshot: Fleet
) -> None:
    contexts = vue_contexts(snapshot, tiny_config)
    assert [c.vue_id for c in contexts] == list(range(tiny_config.n_vues))
    assert {c.a for c in contexts} == {tiny_config.a_ratio}


def test_proposed_scheme_places_with_models(
    tiny_config: ExperimentConfig, snapshot: Fleet, zone_models: dict[int, ZoneModel]
) -> None:
    solution = place_and_select(zone_models, snapshot, tiny_config, "proposed")
    assert solution.scheme == "proposed"
    assert solution.feasible
    assert len(solution.levels) == tiny_config.n_vues


def test_proposed_scheme_needs_models(tiny_config: ExperimentConfig, snapshot: Fleet) -> None:
    with pytest.raises(ConfigurationError):
        place_and_select(None, snapshot, tiny_config, "proposed")


def test_fixed_scheme_hovers_over_the_center(
    tiny_config: ExperimentConfig, snapshot: Fleet, zone_models: dict[int, ZoneModel]
) -> None:
    solution = place_and_select(
        zone_models, snapshot, tiny_config, "fixed", proposed_levels=[1, 2, 2, 3]
    )
    assert solution.e_u == (0.0, 0.0)
    assert solution.levels == (2,) * tiny_config.n_vues
    assert len(solution.b_star) == tiny_config.n_vues
    assert solution.feasible


def test_fixed_scheme_without_models_reports_no_payloads(
    tiny_config: ExperimentConfig, snapshot: Fleet
) -> None:
    solution = place_and_select(None, snapshot, tiny_config, "fixed", proposed_levels=[3])
    assert solution.b_star == ()
    assert solution.levels == (3,) * tiny_config.n_vues
    assert not solution.feasible


def test_random_scheme_is_reproducible(
    tiny_config: ExperimentConfig, snapshot: Fleet, zone_models: dict[int, ZoneModel]
) -> None:
    def place(seed: int) -> tuple[float, float]:
        return place_and_select(
            zone_models,
            snapshot,
            tiny_config,
            "random",
            rng=np.random.default_rng(seed),
            proposed_levels=[2],
        ).e_u

    assert place(9) == place(9)
    assert place(9) != place(10)
    hw = tiny_config.area.half_width
    assert all(abs(c) <= hw for c in place(9))

    with pytest.raises(ConfigurationError):
        place_and_select(zone_models, snapshot, tiny_config, "random", proposed_levels=[2])


def test_simulated_maxima_shape(
    tiny_config: ExperimentConfig, snapshot: Fleet, zone_models: dict[int, ZoneModel]
) -> None:
    solution = place_and_select(zone_models, snapshot, tiny_config, "proposed")
    maxima = simulate_delay_maxima(solution, snapshot, tiny_config, 25, np.random.default_rng(1))
    assert maxima.shape == (25, tiny_config.n_vues)
    assert np.all(np.isfinite(maxima)) and np.all(maxima > 0)


def test_higher_level_means_longer_delays(
    tiny_config: ExperimentConfig, snapshot: Fleet, zone_models: dict[int, ZoneModel]
) -> None:
    low = place_and_select(zone_models, snapshot, tiny_config, "fixed", proposed_levels=[1])
    high = place_and_select(zone_models, snapshot, tiny_config, "fixed", proposed_levels=[4])
    d_low = simulate_delay_maxima(low, snapshot, tiny_config, 20, np.random.default_rng(3))
    d_high = simulate_delay_maxima(high, snapshot, tiny_config, 20, np.random.default_rng(3))
    ratio = tiny_config.resolutions[3].bits / tiny_config.resolutions[0].bits
    assert np.allclose(d_high, ratio * d_low, rtol=1e-12)


def test_strong_transmitter_never_violates(
    tiny_config: ExperimentConfig, snapshot: Fleet, zone_models: dict[int, ZoneModel]
) -> None:
    config = tiny_config.model_copy(update={"tx_power_w": 1e3})
    solution = place_and_select(zone_models, snapshot, config, "proposed")
    report = evaluate_scheme(
        solution, snapshot, config, 40, np.random.default_rng(2), distribution=Distribution.EVEN
    )

    assert report.violation_freq == 0.0
    assert report.per_vue_violation_freq == (0.0,) * config.n_vues
    assert report.config_hash == config_hash(config)
    assert list(report.quantiles) == [f"{q:g}" for q in REPORT_QUANTILES]
    values = [report.quantiles[k] for k in ("0.5", "0.9", "0.99", "0.999")]
    assert values == sorted(values)
    assert report.n_blocks == 40
    assert report.position == solution.e_u
    assert report.mean_level == solution.mean_level


def test_evaluation_is_reproducible(
    tiny_config: ExperimentConfig, snapshot: Fleet, zone_models: dict[int, ZoneModel]
) -> None:
    solution = place_and_select(zone_models, snapshot, tiny_config, "proposed")

    def run() -> dict[str, float]:
        report = evaluate_scheme(
            solution,
            snapshot,
            tiny_config,
            30,
            np.random.default_rng(8),
            distribution=Distribution.EVEN,
        )
        return report.quantiles

    assert run() == run()
