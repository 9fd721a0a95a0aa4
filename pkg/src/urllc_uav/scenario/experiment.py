from __future__ import annotations

import hashlib
import math
import tomllib
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from urllc_uav.channel.spec import ChannelSpec
from urllc_uav.core.errors import ConfigurationError
from urllc_uav.gpr.train import training_grid
from urllc_uav.scenario.area import AreaSpec, ZoneId

ArrayF64 = NDArray[np.float64]

SCHEMA_VERSION = 1


def dbm_to_watts(dbm: float) -> float:
    return float(10 ** ((dbm - 30.0) / 10.0))


class Resolution(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    label: str
    bits: float = Field(gt=0)


DEFAULT_RESOLUTIONS: tuple[Resolution, ...] = (
    Resolution(label="240p", bits=2.5e6),
    Resolution(label="360p", bits=5.5e6),
    Resolution(label="480p", bits=9.8e6),
    Resolution(label="720p", bits=22e6),
)


class MobilitySpec(BaseModel):
    """Manhattan-grid random walk: constant per-vehicle speed, random turns at crossings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    speed_min_mps: float = Field(default=8.0, ge=0)
    speed_max_mps: float = Field(default=14.0, ge=0)
    # (straight, left, right)
    turn_probs: tuple[float, float, float] = (0.5, 0.25, 0.25)

    @model_validator(mode="after")
    def _check(self) -> MobilitySpec:
        if self.speed_max_mps < self.speed_min_mps:
            raise ValueError("speed_max_mps must be >= speed_min_mps")
        if any(p < 0 for p in self.turn_probs) or not math.isclose(sum(self.turn_probs), 1.0):
            raise ValueError(f"turn_probs must be nonnegative and sum to 1; got {self.turn_probs}")
        return self


class ExperimentConfig(BaseModel):
    """
    Global experiment configuration. Symbol map:
      n_vues=V, slots_per_block=S0, tx_power_w=P, bandwidth_hz=W, noise_psd_w_per_hz=N0,
      delay_threshold_s=T_th, d_th_m=d_th, samples_per_position=N,
      gev_learning_rate=nu, placement_step=delta, n_training_positions=K.
    Defaults are the full-scale experiment values.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION

    n_vues: int = Field(default=200, ge=1)
    slots_per_block: int = Field(default=150, ge=1)
    slot_length_s: float = Field(default=0.033, gt=0)
    tx_power_w: float = Field(default=dbm_to_watts(30.0), gt=0)
    bandwidth_hz: float = Field(default=50e6, gt=0)
    noise_psd_w_per_hz: float = Field(default=dbm_to_watts(-174.0), gt=0)
    delay_threshold_s: float = Field(default=3.0, gt=0)
    epsilon: float = Field(default=1e-3, gt=0, lt=1)
    d_th_m: float = Field(default=20.0, gt=0)
    samples_per_position: int = Field(default=30_000, ge=1)
    gev_learning_rate: float = Field(default=5e-4, gt=0)
    placement_step: float = Field(default=5e-6, gt=0)
    n_training_positions: int = Field(default=81, ge=1)
    resolutions: tuple[Resolution, ...] = DEFAULT_RESOLUTIONS
    origin: tuple[float, float] = (0.0, 0.0)
    master_seed: int = Field(default=0, ge=0)

    area: AreaSpec = AreaSpec()
    channel: ChannelSpec = ChannelSpec()
    mobility: MobilitySpec = MobilitySpec()

    biased_zone_weights: tuple[float, ...] = (0.4, 0.05, 0.05, 0.05, 0.05, 0.4)
    collect_zones: tuple[ZoneId, ...] | None = None
    eval_blocks: int = Field(default=2000, ge=1)

    gev_max_iter: int = Field(default=100_000, ge=1)
    gev_loglik_tol: float = Field(default=1e-9, gt=0)
    gpr_restarts: int = Field(default=8, ge=1)
    solver_max_iter: int = Field(default=10_000, ge=1)
    solver_step_tol_m: float = Field(default=1e-3, gt=0)

    @model_validator(mode="before")
    @classmethod
    def _convert_dbm(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        for dbm_key, watt_key in (
            ("tx_power_dbm", "tx_power_w"),
            ("noise_psd_dbm_per_hz", "noise_psd_w_per_hz"),
        ):
            if dbm_key in data:
                if watt_key in data:
                    raise ValueError(f"Give either {dbm_key} or {watt_key}, not both")
                data[watt_key] = dbm_to_watts(float(data.pop(dbm_key)))
        return data

    @model_validator(mode="after")
    def _check(self) -> ExperimentConfig:
        if not self.resolutions:
            raise ValueError("resolutions must not be empty")
        bits = [r.bits for r in self.resolutions]
        if any(b2 <= b1 for b1, b2 in zip(bits, bits[1:], strict=False)):
            raise ValueError(f"resolutions must be strictly increasing in bits; got {bits}")

        side = math.isqrt(self.n_training_positions)
        if side * side != self.n_training_positions:
            raise ValueError(
                "n_training_positions must be a perfect square (grid); "
                f"got {self.n_training_positions}"
            )

        if any(abs(c) > self.area.half_width for c in self.origin):
            raise ValueError(f"origin {self.origin} lies outside the area")

        if len(self.biased_zone_weights) != self.area.n_zones:
            raise ValueError(
                f"biased_zone_weights needs {self.area.n_zones} entries; "
                f"got {len(self.biased_zone_weights)}"
            )
        if any(w < 0 for w in self.biased_zone_weights) or sum(self.biased_zone_weights) <= 0:
            raise ValueError("biased_zone_weights must be nonnegative with a positive sum")

        if self.collect_zones is not None:
            unknown = sorted(set(self.collect_zones) - set(self.area.zone_ids))
            if unknown or not self.collect_zones:
                raise ValueError(f"collect_zones has unknown or no zones: {unknown}")
        return self

    # -----------------------------
    # Derived quantities
    # -----------------------------

    @property
    def a1_bits(self) -> float:
        return self.resolutions[0].bits

    @property
    def resolution_bits(self) -> ArrayF64:
        return np.array([r.bits for r in self.resolutions], dtype=float)

    @property
    def zones(self) -> tuple[ZoneId, ...]:
        if self.collect_zones is None:
            return self.area.zone_ids
        return tuple(sorted(self.collect_zones))

    @property
    def a_ratio(self) -> float:
        """a_i = A_1 * T_th / V, identical for every VUE under a common threshold."""
        return self.a1_bits * self.delay_threshold_s / self.n_vues

    def training_positions(self) -> ArrayF64:
        """Uniform sqrt(K) x sqrt(K) grid over the area, x varying fastest."""
        return training_grid(self.area.half_width, math.isqrt(self.n_training_positions))


PRESETS: dict[str, dict[str, Any]] = {
    "full": {},
    "desk": {
        "samples_per_position": 3_000,
        "n_training_positions": 25,
        "n_vues": 50,
        "eval_blocks": 2_000,
        "d_th_m": 120.0,
    },
}


def _deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def config_from_mapping(raw: Mapping[str, Any]) -> ExperimentConfig:
    if "schema_version" not in raw:
        raise ConfigurationError("Config is missing the mandatory schema_version field")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ConfigurationError(
            f"Unsupported schema_version {raw['schema_version']!r}; expected {SCHEMA_VERSION}"
        )

    data = dict(raw)
    preset = data.pop("preset", "full")
    if preset not in PRESETS:
        raise ConfigurationError(f"Unknown preset {preset!r}; choose from {sorted(PRESETS)}")

    try:
        return ExperimentConfig.model_validate(_deep_merge(PRESETS[preset], data))
    except ValidationError as e:
        raise ConfigurationError(f"Invalid experiment config: {e.errors()[0]['msg']}") from e


def load_config(path: Path) -> ExperimentConfig:
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError(f"Config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"Config file {path} is not valid TOML: {e}") from e
    return config_from_mapping(raw)


def preset_config(name: str = "full", **overrides: Any) -> ExperimentConfig:
    return config_from_mapping({"schema_version": SCHEMA_VERSION, "preset": name, **overrides})


def config_hash(config: ExperimentConfig) -> str:
    canonical = config.model_dump_json(round_trip=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
