from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import IntEnum, StrEnum

import numpy as np
from numpy.typing import NDArray

from urllc_uav.core.errors import ConfigurationError
from urllc_uav.scenario.area import GEOM_TOL, AreaSpec, ZoneId, zone_segments
from urllc_uav.scenario.experiment import ExperimentConfig, MobilitySpec

ArrayF64 = NDArray[np.float64]
ArrayI8 = NDArray[np.int8]


class Heading(IntEnum):
    EAST = 0  # +x
    WEST = 1  # -x
    NORTH = 2  # +y
    SOUTH = 3  # -y


class Distribution(StrEnum):
    EVEN = "even"
    BIASED = "biased"


# indexed by Heading value
_AXIS = np.array([0, 0, 1, 1], dtype=np.int64)
_SIGN = np.array([1.0, -1.0, 1.0, -1.0])
_LEFT = np.array([2, 3, 1, 0], dtype=np.int8)
_RIGHT = np.array([3, 2, 0, 1], dtype=np.int8)
_REVERSE = np.array([1, 0, 3, 2], dtype=np.int8)

DEFAULT_MOBILITY = MobilitySpec()


@dataclass(frozen=True, slots=True)
class VehicleState:
    position: tuple[float, float]
    heading: Heading
    speed: float  # meters per slot


@dataclass(frozen=True, slots=True, eq=False)
class Fleet:
    """Struct-of-arrays form of many VehicleStates; the unit the simulators work on."""

    positions: ArrayF64  # (n, 2)
    headings: ArrayI8  # (n,)
    speeds: ArrayF64  # (n,) meters per slot

    def __len__(self) -> int:
        return int(self.headings.shape[0])

    @classmethod
    def from_states(cls, states: Sequence[VehicleState]) -> Fleet:
        return cls(
            positions=np.array([s.position for s in states], dtype=float).reshape(-1, 2),
            headings=np.array([int(s.heading) for s in states], dtype=np.int8),
            speeds=np.array([s.speed for s in states], dtype=float),
        )

    def to_states(self) -> list[VehicleState]:
        return [
            VehicleState(
                position=(float(p[0]), float(p[1])),
                heading=Heading(int(h)),
                speed=float(s),
            )
            for p, h, s in zip(self.positions, self.headings, self.speeds, strict=True)
        ]

    def tile(self, reps: int) -> Fleet:
        """`reps` stacked copies, copy-major (vehicle i of copy r sits at r * n + i)."""
        return Fleet(
            positions=np.tile(self.positions, (reps, 1)),
            headings=np.tile(self.headings, reps),
            speeds=np.tile(self.speeds, reps),
        )


def zone_weights(
    config: ExperimentConfig, distribution: Distribution | Sequence[float]
) -> ArrayF64:
    if isinstance(distribution, str):
        if Distribution(distribution) is Distribution.EVEN:
            weights = np.ones(config.area.n_zones)
        else:
            weights = np.asarray(config.biased_zone_weights, dtype=float)
    else:
        weights = np.asarray(distribution, dtype=float)

    if weights.shape != (config.area.n_zones,):
        raise ConfigurationError(
            f"Zone weights need {config.area.n_zones} entries; got {weights.shape}"
        )
    if np.any(weights < 0) or weights.sum() <= 0:
        raise ConfigurationError("Zone weights must be nonnegative with a positive sum")
    result: ArrayF64 = weights / weights.sum()
    return result


def _draw_speeds(
    mobility: MobilitySpec, slot_length_s: float, n: int, rng: np.random.Generator
) -> ArrayF64:
    mps = rng.uniform(mobility.speed_min_mps, mobility.speed_max_mps, size=n)
    result: ArrayF64 = mps * slot_length_s
    return result


def spawn_in_zone(
    config: ExperimentConfig, zone: ZoneId, n: int, rng: np.random.Generator
) -> Fleet:
    """`n` vehicles uniformly on the roads of one zone, random heading along their road."""
    segments = zone_segments(config.area, zone)
    if not segments:
        raise ConfigurationError(f"Zone {zone} contains no road; cannot place vehicles there")

    lengths = np.array([s.length for s in segments], dtype=float)
    seg_idx = rng.choice(len(segments), size=n, p=lengths / lengths.sum())
    u = rng.random(n)
    backwards = rng.random(n) < 0.5
    speeds = _draw_speeds(config.mobility, config.slot_length_s, n, rng)

    positions = np.empty((n, 2), dtype=float)
    headings = np.empty(n, dtype=np.int8)
    for j, seg in enumerate(segments):
        mask = seg_idx == j
        along = seg.start + u[mask] * seg.length
        positions[mask] = seg.point_at(along)
        forward = Heading.EAST if seg.axis == 0 else Heading.NORTH
        headings[mask] = np.where(backwards[mask], _REVERSE[int(forward)], int(forward))

    return Fleet(positions=positions, headings=headings, speeds=speeds)


def spawn_fleet(
    config: ExperimentConfig,
    distribution: Distribution | Sequence[float],
    rng: np.random.Generator,
    *,
    n: int | None = None,
) -> Fleet:
    """Vehicles placed zone-by-zone with occupancy proportional to the zone weights."""
    count = config.n_vues if n is None else n
    weights = zone_weights(config, distribution)
    zone_ids = np.asarray(config.area.zone_ids)
    drawn = rng.choice(zone_ids, size=count, p=weights)

    positions = np.empty((count, 2), dtype=float)
    headings = np.empty(count, dtype=np.int8)
    speeds = np.empty(count, dtype=float)
    for zone in config.area.zone_ids:
        mask = drawn == zone
        k = int(mask.sum())
        if k == 0:
            continue
        part = spawn_in_zone(config, zone, k, rng)
        positions[mask] = part.positions
        headings[mask] = part.headings
        speeds[mask] = part.speeds

    return Fleet(positions=positions, headings=headings, speeds=speeds)


def spawn_vehicles(
    config: ExperimentConfig,
    distribution: Distribution | Sequence[float],
    rng: np.random.Generator,
) -> list[VehicleState]:
    return spawn_fleet(config, distribution, rng).to_states()


def _next_node(
    coord: ArrayF64, sign: ArrayF64, cross: ArrayF64, half_width: float
) -> ArrayF64:
    """Nearest crossing road or area edge strictly ahead of `coord` along `sign`."""
    nodes = np.unique(np.concatenate([cross, [-half_width, half_width]]))
    ahead_idx = np.searchsorted(nodes, coord + GEOM_TOL, side="left")
    behind_idx = np.searchsorted(nodes, coord - GEOM_TOL, side="right") - 1
    ahead = nodes[np.clip(ahead_idx, 0, len(nodes) - 1)]
    behind = nodes[np.clip(behind_idx, 0, len(nodes) - 1)]
    result: ArrayF64 = np.where(sign > 0, ahead, behind)
    return result


def advance_fleet(
    fleet: Fleet,
    area: AreaSpec,
    rng: np.random.Generator,
    *,
    mobility: MobilitySpec = DEFAULT_MOBILITY,
) -> Fleet:
    """
    One slot of Manhattan-grid motion for every vehicle.

    Each vehicle travels `speed` meters along its road; at a crossing it goes straight,
    turns left or turns right per `mobility.turn_probs`; at the area edge it U-turns.
    """
    positions = fleet.positions.copy()
    headings = fleet.headings.copy()
    remaining = fleet.speeds.copy()

    cross_for_axis = (
        np.asarray(area.road_offsets_x, dtype=float),  # moving along x crosses N-S roads
        np.asarray(area.road_offsets_y, dtype=float),
    )
    p_straight, p_left, _ = mobility.turn_probs

    while True:
        active = np.nonzero(remaining > 0)[0]
        if active.size == 0:
            break

        h = headings[active].astype(np.int64)
        axis = _AXIS[h]
        sign = _SIGN[h]
        coord = positions[active, axis]

        node = np.empty_like(coord)
        for ax in (0, 1):
            sel = axis == ax
            if sel.any():
                node[sel] = _next_node(coord[sel], sign[sel], cross_for_axis[ax], area.half_width)

        dist = np.abs(node - coord)
        step = remaining[active]
        short = step < dist

        # vehicles that stop before the next node
        idx_short = active[short]
        positions[idx_short, axis[short]] = coord[short] + sign[short] * step[short]
        remaining[idx_short] = 0.0

        # vehicles that reach the node and decide there
        reach = ~short
        idx_reach = active[reach]
        if idx_reach.size == 0:
            continue
        positions[idx_reach, axis[reach]] = node[reach]
        remaining[idx_reach] = step[reach] - dist[reach]

        h_reach = h[reach]
        at_edge = np.abs(node[reach]) >= area.half_width - GEOM_TOL
        u = rng.random(idx_reach.size)
        turned = np.where(
            u < p_straight,
            h_reach,
            np.where(u < p_straight + p_left, _LEFT[h_reach], _RIGHT[h_reach]),
        ).astype(np.int8)
        new_heading = np.where(at_edge, _REVERSE[h_reach], turned).astype(np.int8)

        # a turn onto a road that runs along the area edge may point outward
        new_axis = _AXIS[new_heading.astype(np.int64)]
        new_coord = positions[idx_reach, new_axis]
        outward = np.abs(new_coord) >= area.half_width - GEOM_TOL
        outward &= np.sign(new_coord) == _SIGN[new_heading.astype(np.int64)]
        new_heading = np.where(outward, _REVERSE[new_heading.astype(np.int64)], new_heading)

        headings[idx_reach] = new_heading.astype(np.int8)

    return Fleet(positions=positions, headings=headings, speeds=fleet.speeds.copy())


def step_mobility(
    state: VehicleState,
    area: AreaSpec,
    rng: np.random.Generator,
    *,
    mobility: MobilitySpec = DEFAULT_MOBILITY,
) -> VehicleState:
    return advance_fleet(Fleet.from_states([state]), area, rng, mobility=mobility).to_states()[0]
