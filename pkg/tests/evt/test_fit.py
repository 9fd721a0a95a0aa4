from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from urllc_uav.core.errors import FitError
from urllc_uav.evt.fit import fit_gev, moment_start
from urllc_uav.evt.gev import gev_quantile, ks_distance


def _gev_samples(
    rng: np.random.Generator, n: int, mu: float, sigma: float, xi: float
) -> np.ndarray:
    return stats.genextreme.rvs(c=-xi, loc=mu, scale=sigma, size=n, random_state=rng)


def test_recovers_known_parameters(rng: np.random.Generator) -> None:
    samples = _gev_samples(rng, 30_000, 4e-3, 5e-4, 0.1)
    report = fit_gev(samples, nu=0.05, max_iter=20_000, tol=1e-12)

    assert report.converged
    p = report.params
    assert p.mu == pytest.approx(4e-3, rel=0.01)
    assert p.sigma == pytest.approx(5e-4, rel=0.03)
    assert p.xi == pytest.approx(0.1, abs=0.03)
    assert report.n_samples == 30_000
    assert report.gradient_norm < 1e-4
    assert ks_distance(samples, p) < 0.015


@pytest.mark.slow
def test_recovers_known_parameters_at_default_rate(rng: np.random.Generator) -> None:
    samples = _gev_samples(rng, 30_000, 1.0, 0.2, -0.1)
    report = fit_gev(samples, max_iter=1_000_000, tol=1e-12)

    assert report.converged
    assert report.params.xi == pytest.approx(-0.1, abs=0.03)
    assert report.params.mu == pytest.approx(1.0, rel=0.01)


@pytest.mark.slow
def test_recovers_unit_scale_parameters_at_default_rate(rng: np.random.Generator) -> None:
    samples = _gev_samples(rng, 30_000, 1.0, 0.5, 0.1)
    report = fit_gev(samples, max_iter=1_000_000, tol=1e-12)

    assert report.converged
    assert report.params.mu == pytest.approx(1.0, abs=0.01)
    assert report.params.sigma == pytest.approx(0.5, abs=0.01)
    assert report.params.xi == pytest.approx(0.1, abs=0.03)


def test_samples_below_zero_are_fitted(rng: np.random.Generator) -> None:
    samples = _gev_samples(rng, 20_000, -2.0, 0.5, 0.1)
    assert np.any(samples < 0)
    report = fit_gev(samples, nu=0.05, max_iter=20_000)

    assert report.params.mu == pytest.approx(-2.0, abs=0.02)
    assert report.params.sigma == pytest.approx(0.5, abs=0.02)
    assert report.params.xi == pytest.approx(0.1, abs=0.03)


def test_exponential_block_maxima_are_gumbel_like(rng: np.random.Generator) -> None:
    maxima = rng.exponential(1.0, size=(10_000, 150)).max(axis=1)
    report = fit_gev(maxima, nu=0.05, max_iter=20_000)
    assert abs(report.params.xi) < 0.1
    # Gumbel location of the maximum of n unit exponentials is ln n
    assert report.params.mu == pytest.approx(np.log(150), rel=0.02)


def test_affine_equivariance(rng: np.random.Generator) -> None:
    samples = _gev_samples(rng, 2000, 1.0, 0.3, 0.05)
    # tol=0 runs both fits for exactly max_iter steps
    base = fit_gev(samples, nu=0.05, max_iter=3000, tol=0.0).params
    moved = fit_gev(3.0 * samples + 2.0, nu=0.05, max_iter=3000, tol=0.0).params

    assert moved.mu == pytest.approx(3.0 * base.mu + 2.0, rel=1e-8)
    assert moved.sigma == pytest.approx(3.0 * base.sigma, rel=1e-8)
    assert moved.xi == pytest.approx(base.xi, abs=1e-8)


def test_loglik_does_not_drop_below_start(rng: np.random.Generator) -> None:
    samples = _gev_samples(rng, 3000, 2.0, 0.5, 0.2)
    report = fit_gev(samples, nu=0.05, max_iter=10_000)
    start = report.start
    start_ll = float(
        np.mean(stats.genextreme.logpdf(samples, c=-start.xi, loc=start.mu, scale=start.sigma))
    )
    assert report.final_loglik >= start_ll


def test_iteration_cap_reports_not_converged(rng: np.random.Generator) -> None:
    samples = _gev_samples(rng, 500, 1.0, 0.3, 0.1)
    report = fit_gev(samples, max_iter=3)
    assert report.iterations == 3
    assert not report.converged


def test_bounded_fit_covers_every_sample(rng: np.random.Generator) -> None:
    samples = 10.0 - _gev_samples(rng, 2000, 0.0, 1.0, 0.3)
    report = fit_gev(samples, nu=0.05, max_iter=20_000)
    assert report.params.xi < 0
    upper = report.params.mu - report.params.sigma / report.params.xi
    assert upper >= samples.max()


def test_fitted_quantile_close_to_empirical(rng: np.random.Generator) -> None:
    samples = _gev_samples(rng, 20_000, 5e-3, 1e-3, 0.15)
    report = fit_gev(samples, nu=0.05, max_iter=20_000)
    assert float(gev_quantile(0.99, report.params)) == pytest.approx(
        np.quantile(samples, 0.99), rel=0.03
    )


def test_moment_start() -> None:
    start = moment_start(mean=1.0, sd=np.pi / np.sqrt(6.0))
    assert start.sigma == pytest.approx(1.0)
    assert start.mu == pytest.approx(1.0 - 0.5772156649015329)
    assert start.xi == 0.1


@pytest.mark.parametrize(
    "samples",
    [
        np.full(10, 1.0),
        np.full(100, 2.5),
        np.r_[np.linspace(1.0, 2.0, 99), np.nan],
        np.r_[np.linspace(1.0, 2.0, 99), np.inf],
    ],
    ids=["too-few", "identical", "nan", "inf"],
)
def test_invalid_samples_rejected(samples: np.ndarray) -> None:
    with pytest.raises(FitError):
        fit_gev(samples)


def test_nonpositive_rate_rejected(rng: np.random.Generator) -> None:
    with pytest.raises(FitError):
        fit_gev(rng.uniform(1.0, 2.0, 100), nu=0.0)
