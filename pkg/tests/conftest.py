from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from urllc_uav.gpr.schema import GprHyper, GprModel, ZoneModel
from urllc_uav.scenario.experiment import ExperimentConfig, preset_config

# a field whose length scale dwarfs the area is constant to ~1e-13 relative
FLAT_ELL = 1e16


def point_model(
    value: float, center: tuple[float, float] = (0.0, 0.0), ell: float = FLAT_ELL
) -> GprModel:
    """K=1 model: value * exp(-||e - center||^2 / (2 ell))."""
    return GprModel(
        train_positions=(center,),
        targets=(value,),
        hyper=GprHyper(gamma=1.0, ell=ell, lam=0.0),
        alpha=(value,),
    )


def synthetic_zone(
    zone: int,
    *,
    mu: GprModel | float = 4e-3,
    sigma: GprModel | float = 5e-4,
    zeta: GprModel | float = 4.0,
) -> ZoneModel:
    def as_model(v: GprModel | float) -> GprModel:
        return v if isinstance(v, GprModel) else point_model(v)

    return ZoneModel(
        zone=zone, model_mu=as_model(mu), model_sigma=as_model(sigma), model_zeta=as_model(zeta)
    )


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture()
def full_config() -> ExperimentConfig:
    return preset_config("full")


@pytest.fixture()
def tiny_config() -> ExperimentConfig:
    """Every zone, a 2x2 training grid and short blocks: the whole pipeline in seconds."""
    return preset_config(
        "desk",
        n_vues=4,
        slots_per_block=3,
        samples_per_position=60,
        n_training_positions=4,
        eval_blocks=30,
        gev_learning_rate=0.05,
        gev_max_iter=3000,
        gpr_restarts=2,
        solver_max_iter=500,
        master_seed=7,
    )


@pytest.fixture()
def make_zone() -> Callable[..., ZoneModel]:
    return synthetic_zone


@pytest.fixture()
def make_point() -> Callable[..., GprModel]:
    return point_model
