from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from urllc_uav.scenario.area import ZoneId

ArrayF64 = NDArray[np.float64]


class VueContext(BaseModel):
    """One VUE as the optimizer sees it: its zone at block start and a_i = A_1 T_th / V."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    vue_id: int = Field(ge=0)
    zone: ZoneId
    a: float = Field(gt=0)


@dataclass(frozen=True, slots=True)
class EffectiveParams:
    """Per-VUE predicted (mu, sigma, zeta) after clamping."""

    mu: ArrayF64
    sigma: ArrayF64
    zeta: ArrayF64
    clamps: int

    @property
    def denominator(self) -> ArrayF64:
        result: ArrayF64 = self.sigma * self.zeta + self.mu
        return result


class PlacementSolution(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    scheme: str = "proposed"
    e_u: tuple[float, float]
    altitude: float = Field(gt=0)
    b_star: tuple[float, ...]  # bits per VUE; empty when no zone models were available
    levels: tuple[int, ...]  # 1-based resolution index per VUE
    feasible_levels: tuple[bool, ...]
    objective: float  # sum of B*, bits

    iterations: int = Field(default=0, ge=0)
    projections_applied: int = Field(default=0, ge=0)
    step_halvings: int = Field(default=0, ge=0)
    clamps: int = Field(default=0, ge=0)
    initial_objective: float | None = None  # sum of B* at the start, bits
    objective_trace: tuple[float, ...] = ()  # sum of B* after each accepted step
    converged: bool = True
    projection_failed: bool = False
    feasible: bool

    @model_validator(mode="after")
    def _check(self) -> PlacementSolution:
        if self.b_star and len(self.b_star) != len(self.levels):
            raise ValueError("b_star and levels must cover the same VUEs")
        if len(self.feasible_levels) != len(self.levels):
            raise ValueError("feasible_levels and levels must cover the same VUEs")
        return self

    @property
    def mean_level(self) -> float:
        return float(np.mean(self.levels)) if self.levels else 0.0
