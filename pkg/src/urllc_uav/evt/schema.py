from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

# |xi| below this uses the Gumbel limit
XI_EPS = 1e-6

# sanity bound on fitted shapes
XI_MAX_ABS = 5.0


class GevParams(BaseModel):
    """Location `mu`, scale `sigma`, shape `xi` of a generalized extreme value law."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mu: float
    sigma: float = Field(gt=0)
    xi: float

    @model_validator(mode="after")
    def _check(self) -> GevParams:
        if not all(math.isfinite(v) for v in (self.mu, self.sigma, self.xi)):
            raise ValueError(f"GEV parameters must be finite; got {self!r}")
        if abs(self.xi) >= XI_MAX_ABS:
            raise ValueError(f"|xi| must be below {XI_MAX_ABS}; got {self.xi}")
        return self

    @property
    def is_gumbel(self) -> bool:
        return abs(self.xi) < XI_EPS


class FitReport(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    params: GevParams
    start: GevParams
    iterations: int = Field(ge=0)
    final_loglik: float  # nats per sample, on the original sample scale
    converged: bool
    support_violations_repaired: int = Field(ge=0)
    # norm of the sample-averaged gradient on the standardized samples
    gradient_norm: float = Field(ge=0)
    n_samples: int = Field(ge=1)
