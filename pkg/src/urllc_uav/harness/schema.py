from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from urllc_uav.evt.schema import FitReport
from urllc_uav.gpr.schema import ZoneModel
from urllc_uav.placement.schema import PlacementSolution
from urllc_uav.scenario.area import ZoneId
from urllc_uav.scenario.mobility import Distribution

FORMAT_VERSION = 1

Scheme = Literal["proposed", "fixed", "random"]
SCHEMES: tuple[Scheme, ...] = ("proposed", "fixed", "random")


class _Document(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    format_version: Literal[1] = FORMAT_VERSION


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    zone: ZoneId
    position_index: int = Field(ge=0)
    position: tuple[float, float]
    n_samples: int = Field(ge=0)
    csv_path: str  # relative to the output directory
    seed: int


class CollectionManifest(_Document):
    config_hash: str
    master_seed: int
    entries: tuple[ManifestEntry, ...] = ()

    def entry(self, zone: ZoneId, position_index: int) -> ManifestEntry | None:
        for e in self.entries:
            if e.zone == zone and e.position_index == position_index:
                return e
        return None


class FitEntry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    zone: ZoneId
    position_index: int = Field(ge=0)
    report: FitReport
    ks_distance: float = Field(ge=0, le=1)


class FitsDocument(_Document):
    config_hash: str
    entries: tuple[FitEntry, ...]


class ZoneModelBundle(_Document):
    config_hash: str
    epsilon: float
    zones: tuple[ZoneModel, ...]


class VueRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    vue_id: int = Field(ge=0)
    x: float
    y: float
    heading: int = Field(ge=0, le=3)
    speed: float = Field(ge=0)  # meters per slot
    zone: ZoneId


class PlacementDocument(_Document):
    config_hash: str
    distribution: Distribution
    solution: PlacementSolution
    vues: tuple[VueRecord, ...]


class CcdfPoint(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    t: float
    ccdf: float = Field(ge=0, le=1)


class EvaluationReport(_Document):
    config_hash: str
    scheme: Scheme
    distribution: Distribution
    position: tuple[float, float]
    n_blocks: int = Field(ge=1)
    ccdf: tuple[CcdfPoint, ...]
    quantiles: dict[str, float]
    mean_level: float
    violation_freq: float = Field(ge=0, le=1)
    per_vue_violation_freq: tuple[float, ...]
