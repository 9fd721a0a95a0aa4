from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from urllc_uav.core.errors import OutOfAreaError

ArrayF64 = NDArray[np.float64]
ArrayI64 = NDArray[np.int64]

ZoneId = int

# Tolerance for "on the boundary" / "on the road" comparisons, meters.
GEOM_TOL = 1e-9


class AreaSpec(BaseModel):
    """
    Square grid-road area centered at the origin.

    `road_offsets_x` are the x coordinates of the north-south roads, `road_offsets_y` the
    y coordinates of the east-west roads. Zones tile the box in `zone_rows` x `zone_cols`
    equal rectangles, numbered row-major from the north-west corner.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    half_width: float = Field(default=120.0, gt=0)
    road_offsets_x: tuple[float, ...] = (-80.0, 0.0, 80.0)
    road_offsets_y: tuple[float, ...] = (-80.0, 0.0, 80.0)
    uav_altitude: float = Field(default=50.0, gt=0)
    zone_rows: int = Field(default=2, ge=1)
    zone_cols: int = Field(default=3, ge=1)

    @model_validator(mode="after")
    def _check_roads(self) -> AreaSpec:
        for name, offsets in (("x", self.road_offsets_x), ("y", self.road_offsets_y)):
            bad = [c for c in offsets if abs(c) > self.half_width]
            if bad:
                raise ValueError(f"road_offsets_{name} outside [-half_width, half_width]: {bad}")
            if len(set(offsets)) != len(offsets):
                raise ValueError(f"road_offsets_{name} contains duplicates: {offsets}")
        return self

    @property
    def n_zones(self) -> int:
        return self.zone_rows * self.zone_cols

    @property
    def zone_ids(self) -> tuple[ZoneId, ...]:
        return tuple(range(1, self.n_zones + 1))

    def col_boundaries(self) -> ArrayF64:
        width = 2.0 * self.half_width / self.zone_cols
        return np.array(
            [-self.half_width + j * width for j in range(1, self.zone_cols)], dtype=float
        )

    def row_boundaries(self) -> ArrayF64:
        height = 2.0 * self.half_width / self.zone_rows
        return np.array(
            [self.half_width - i * height for i in range(1, self.zone_rows)], dtype=float
        )

    def zone_bounds(self, zone: ZoneId) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) of a zone rectangle."""
        if zone not in self.zone_ids:
            raise ValueError(f"Unknown zone {zone}; valid zones are 1..{self.n_zones}")
        row, col = divmod(zone - 1, self.zone_cols)
        width = 2.0 * self.half_width / self.zone_cols
        height = 2.0 * self.half_width / self.zone_rows
        x_min = -self.half_width + col * width
        y_max = self.half_width - row * height
        return (x_min, x_min + width, y_max - height, y_max)


def zones_of(positions: ArrayLike, area: AreaSpec) -> ArrayI64:
    """
    Vectorized zone lookup for an (n, 2) array of points.

    Points on a zone boundary go to the lower zone index: a point on a column boundary
    belongs to the western zone, a point on a row boundary to the northern zone.
    """
    pts = np.atleast_2d(np.asarray(positions, dtype=float))
    if pts.shape[-1] != 2:
        raise ValueError(f"Expected (n, 2) positions; got shape {pts.shape}")

    outside = np.any(np.abs(pts) > area.half_width + GEOM_TOL, axis=1)
    if outside.any():
        first = pts[np.argmax(outside)]
        raise OutOfAreaError(
            f"Position ({first[0]:.6g}, {first[1]:.6g}) is outside the "
            f"{2 * area.half_width:g} m x {2 * area.half_width:g} m area"
        )

    col = (pts[:, [0]] > area.col_boundaries()[None, :]).sum(axis=1)
    row = (pts[:, [1]] < area.row_boundaries()[None, :]).sum(axis=1)
    return (row * area.zone_cols + col + 1).astype(np.int64)


def zone_of(position: ArrayLike, area: AreaSpec) -> ZoneId:
    return int(zones_of(position, area)[0])


@dataclass(frozen=True, slots=True)
class RoadSegment:
    """A road piece lying inside one zone; `axis` is the direction of travel (0=x, 1=y)."""

    zone: ZoneId
    axis: int
    fixed: float
    start: float
    end: float

    @property
    def length(self) -> float:
        return self.end - self.start

    def point_at(self, along: ArrayF64) -> ArrayF64:
        fixed = np.full_like(along, self.fixed)
        cols = (along, fixed) if self.axis == 0 else (fixed, along)
        return np.column_stack(cols)


def zone_segments(area: AreaSpec, zone: ZoneId) -> list[RoadSegment]:
    """Road pieces owned by `zone` under the boundary tie-break of `zones_of`."""
    x_min, x_max, y_min, y_max = area.zone_bounds(zone)
    x_mid = 0.5 * (x_min + x_max)
    y_mid = 0.5 * (y_min + y_max)

    segments: list[RoadSegment] = []

    # north-south roads: travel along y
    for c in area.road_offsets_x:
        if x_min - GEOM_TOL <= c <= x_max + GEOM_TOL and zone_of((c, y_mid), area) == zone:
            segments.append(RoadSegment(zone=zone, axis=1, fixed=c, start=y_min, end=y_max))

    # east-west roads: travel along x
    for c in area.road_offsets_y:
        if y_min - GEOM_TOL <= c <= y_max + GEOM_TOL and zone_of((x_mid, c), area) == zone:
            segments.append(RoadSegment(zone=zone, axis=0, fixed=c, start=x_min, end=x_max))

    return segments


def zone_road_lengths(area: AreaSpec) -> dict[ZoneId, float]:
    return {z: sum(s.length for s in zone_segments(area, z)) for z in area.zone_ids}


def on_road(positions: ArrayLike, area: AreaSpec, *, tol: float = 1e-6) -> NDArray[np.bool_]:
    pts = np.atleast_2d(np.asarray(positions, dtype=float))
    xs = np.asarray(area.road_offsets_x, dtype=float)
    ys = np.asarray(area.road_offsets_y, dtype=float)

    inside = np.all(np.abs(pts) <= area.half_width + tol, axis=1)
    on_ns = (
        np.min(np.abs(pts[:, [0]] - xs[None, :]), axis=1) <= tol
        if xs.size
        else np.zeros(len(pts), dtype=bool)
    )
    on_ew = (
        np.min(np.abs(pts[:, [1]] - ys[None, :]), axis=1) <= tol
        if ys.size
        else np.zeros(len(pts), dtype=bool)
    )
    result: NDArray[np.bool_] = inside & (on_ns | on_ew)
    return result
