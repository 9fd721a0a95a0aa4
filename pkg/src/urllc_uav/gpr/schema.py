from __future__ import annotations

from functools import cached_property

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from urllc_uav.scenario.area import ZoneId

ArrayF64 = NDArray[np.float64]


class GprHyper(BaseModel):
    """Signal variance `gamma`, squared length scale `ell` (m^2), noise/regularizer `lam`."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: float = Field(gt=0)
    ell: float = Field(gt=0)
    lam: float = Field(ge=0)


class GprModel(BaseModel):
    """
    Zero-mean GP mean predictor for one scalar field over UAV positions.

    `alpha` = (C + lam I)^-1 targets is precomputed at training time.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    train_positions: tuple[tuple[float, float], ...]
    targets: tuple[float, ...]
    hyper: GprHyper
    alpha: tuple[float, ...]

    @model_validator(mode="after")
    def _check(self) -> GprModel:
        k = len(self.train_positions)
        if k < 1:
            raise ValueError("GprModel needs at least one training position")
        if len(self.targets) != k or len(self.alpha) != k:
            raise ValueError(
                f"targets ({len(self.targets)}) and alpha ({len(self.alpha)}) must match "
                f"the {k} training positions"
            )
        return self

    @property
    def n_train(self) -> int:
        return len(self.train_positions)

    @cached_property
    def positions_array(self) -> ArrayF64:
        return np.asarray(self.train_positions, dtype=float).reshape(-1, 2)

    @cached_property
    def alpha_array(self) -> ArrayF64:
        return np.asarray(self.alpha, dtype=float)

    @cached_property
    def targets_array(self) -> ArrayF64:
        return np.asarray(self.targets, dtype=float)


class ZoneModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    zone: ZoneId
    model_mu: GprModel
    model_sigma: GprModel
    model_zeta: GprModel

    @model_validator(mode="after")
    def _check(self) -> ZoneModel:
        positions = self.model_mu.train_positions
        if (
            self.model_sigma.train_positions != positions
            or self.model_zeta.train_positions != positions
        ):
            raise ValueError(f"Zone {self.zone}: the three models must share training positions")
        return self
