from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
import pytest

from urllc_uav.gpr.kernel import (
    kernel,
    kernel_matrix,
    predict_mean,
    predict_mean_grad,
    sq_distances,
)
from urllc_uav.gpr.schema import GprHyper, GprModel

HYPER = GprHyper(gamma=2.0, ell=50.0, lam=0.0)


def test_kernel_values() -> None:
    assert kernel((0.0, 0.0), (0.0, 0.0), HYPER) == 2.0
    assert kernel((0.0, 0.0), (10.0, 0.0), HYPER) == pytest.approx(2.0 * math.exp(-1.0))
    assert kernel((3.0, 4.0), (0.0, 0.0), HYPER) == pytest.approx(2.0 * math.exp(-0.25))


def test_kernel_matrix_symmetric_with_gamma_diagonal(rng: np.random.Generator) -> None:
    pts = rng.uniform(-100.0, 100.0, size=(12, 2))
    c = kernel_matrix(pts, pts, HYPER)
    assert c.shape == (12, 12)
    assert np.array_equal(c, c.T)
    assert np.all(np.diag(c) == 2.0)
    assert c[3, 7] == pytest.approx(kernel(pts[3], pts[7], HYPER), rel=1e-14)


def test_sq_distances_shapes() -> None:
    d2 = sq_distances([[0.0, 0.0], [3.0, 4.0]], [1.0, 0.0])
    assert d2.shape == (2, 1)
    assert d2[:, 0].tolist() == [1.0, 20.0]


def test_single_point_model_returns_its_value_at_center(
    make_point: Callable[..., GprModel],
) -> None:
    model = make_point(0.7, center=(5.0, -5.0), ell=100.0)
    assert predict_mean(model, (5.0, -5.0)) == pytest.approx(0.7)
    assert predict_mean(model, (15.0, -5.0)) == pytest.approx(0.7 * math.exp(-0.5))


def _random_model(rng: np.random.Generator) -> GprModel:
    k = int(rng.integers(1, 10))
    return GprModel(
        train_positions=tuple(map(tuple, rng.uniform(-120.0, 120.0, size=(k, 2)))),
        targets=tuple(rng.normal(size=k)),
        hyper=GprHyper(
            gamma=float(rng.uniform(0.1, 3.0)), ell=float(rng.uniform(200.0, 5e4)), lam=0.0
        ),
        alpha=tuple(rng.normal(size=k)),
    )


def test_mean_gradient_matches_finite_differences(rng: np.random.Generator) -> None:
    h = 1e-4
    for _ in range(100):
        model = _random_model(rng)
        e = rng.uniform(-120.0, 120.0, size=2)
        analytic = predict_mean_grad(model, e)
        numeric = np.array(
            [
                (predict_mean(model, e + h * u) - predict_mean(model, e - h * u)) / (2 * h)
                for u in np.eye(2)
            ]
        )
        assert np.allclose(analytic, numeric, rtol=1e-7, atol=1e-9)


def test_mean_gradient_vanishes_at_single_center(make_point: Callable[..., GprModel]) -> None:
    model = make_point(3.0, center=(20.0, 10.0), ell=400.0)
    assert np.allclose(predict_mean_grad(model, (20.0, 10.0)), 0.0)
    # uphill points toward the center of a positive bump
    g = predict_mean_grad(model, (30.0, 10.0))
    assert g[0] < 0 and g[1] == pytest.approx(0.0)
