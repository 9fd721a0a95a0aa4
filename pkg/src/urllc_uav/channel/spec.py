from __future__ import annotations

import math
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ChannelSpec(BaseModel):
    """Air-to-ground channel constants: h = phi * |psi|^2 / (theta * D)^2."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    phi: float = Field(default=3.24e-4, gt=0)
    theta: float = Field(default=math.atan(24 * math.sqrt(2) / 5), gt=0, lt=math.pi / 2)
    rician_kappa: float = Field(default=10**1.2, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _convert_db(cls, data: Any) -> Any:
        if isinstance(data, dict) and "rician_factor_db" in data:
            data = dict(data)
            if "rician_kappa" in data:
                raise ValueError("Give either rician_factor_db or rician_kappa, not both")
            data["rician_kappa"] = 10 ** (float(data.pop("rician_factor_db")) / 10)
        return data
