from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from urllc_uav.channel.model import channel_gain, draw_fading, normalized_slot_delay, uav_point
from urllc_uav.core.rng import stream
from urllc_uav.scenario.area import ZoneId
from urllc_uav.scenario.experiment import ExperimentConfig
from urllc_uav.scenario.mobility import advance_fleet, spawn_in_zone

logger = logging.getLogger(__name__)

ArrayF64 = NDArray[np.float64]

COLLECT_PURPOSE = "collect"
MAX_RESAMPLE_ROUNDS = 100


@dataclass(frozen=True, slots=True)
class DelaySample:
    value: float  # seconds, normalized delay block maximum
    zone: ZoneId
    uav_position: tuple[float, float]
    block_index: int


def block_maxima(
    config: ExperimentConfig,
    zone: ZoneId,
    uav_position: ArrayLike,
    n_blocks: int,
    rng: np.random.Generator,
) -> ArrayF64:
    """
    Block maxima of the normalized slot delay for `n_blocks` independent blocks.

    Each block tracks one freshly spawned VUE on the roads of `zone` for S0 slots while
    the UAV hovers at `uav_position`; the VUE keeps moving and may leave the zone. Blocks
    containing a zero-gain slot (infinite delay) are discarded and simulated again.
    """
    if n_blocks < 1:
        raise ValueError(f"n_blocks must be at least 1; got {n_blocks}")

    maxima = _simulate_blocks(config, zone, uav_position, n_blocks, rng)
    for _ in range(MAX_RESAMPLE_ROUNDS):
        bad = ~np.isfinite(maxima)
        if not bad.any():
            return maxima
        logger.warning("Rejecting %d block(s) with infinite delay in zone %d", bad.sum(), zone)
        maxima[bad] = _simulate_blocks(config, zone, uav_position, int(bad.sum()), rng)
    raise RuntimeError(f"Blocks in zone {zone} keep producing infinite delays")


def _simulate_blocks(
    config: ExperimentConfig,
    zone: ZoneId,
    uav_position: ArrayLike,
    n_blocks: int,
    rng: np.random.Generator,
) -> ArrayF64:
    uav = uav_point(uav_position, config.area.uav_altitude)
    fleet = spawn_in_zone(config, zone, n_blocks, rng)
    maxima = np.zeros(n_blocks)
    for slot in range(config.slots_per_block):
        fading = draw_fading(config.channel, rng, n_blocks)
        h = channel_gain(uav, fleet.positions, config.channel, fading)
        maxima = np.maximum(maxima, normalized_slot_delay(h, config))
        if slot + 1 < config.slots_per_block:
            fleet = advance_fleet(fleet, config.area, rng, mobility=config.mobility)
    return maxima


def collect_block_maxima(
    config: ExperimentConfig,
    zone: ZoneId,
    uav_position: ArrayLike,
    n_blocks: int,
    rng: np.random.Generator,
) -> list[DelaySample]:
    xy = np.asarray(uav_position, dtype=float)
    values = block_maxima(config, zone, xy, n_blocks, rng)
    position = (float(xy[0]), float(xy[1]))
    return [
        DelaySample(value=float(v), zone=zone, uav_position=position, block_index=i)
        for i, v in enumerate(values)
    ]


def collect_position(
    config: ExperimentConfig,
    zone: ZoneId,
    position_index: int,
    *,
    chunk_blocks: int,
) -> ArrayF64:
    """
    All `samples_per_position` block maxima for one (zone, training position).

    Blocks are simulated in chunks, each from its own substream keyed by
    (master_seed, zone, position_index, chunk), so the result does not depend on how the
    work is scheduled.
    """
    position = config.training_positions()[position_index]
    n_total = config.samples_per_position
    n_chunks = math.ceil(n_total / chunk_blocks)

    parts = []
    for chunk in range(n_chunks):
        n = min(chunk_blocks, n_total - chunk * chunk_blocks)
        rng = stream(config.master_seed, COLLECT_PURPOSE, zone, position_index, chunk)
        parts.append(block_maxima(config, zone, position, n, rng))
    return np.concatenate(parts)
