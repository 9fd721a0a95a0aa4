from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from urllc_uav.channel.spec import ChannelSpec
from urllc_uav.core.errors import DegenerateGeometryError, DomainError
from urllc_uav.scenario.experiment import ExperimentConfig

ArrayF64 = NDArray[np.float64]


def draw_fading(
    spec: ChannelSpec, rng: np.random.Generator, size: int | tuple[int, ...] | None = None
) -> ArrayF64:
    """
    Rician power gain |psi|^2 normalized to E|psi|^2 = 1.

    LoS amplitude sqrt(kappa / (1 + kappa)) on the real part, diffuse variance
    1 / (2 (1 + kappa)) per component.
    """
    kappa = spec.rician_kappa
    los = math.sqrt(kappa / (1.0 + kappa))
    scatter_sd = math.sqrt(1.0 / (2.0 * (1.0 + kappa)))
    re = rng.normal(los, scatter_sd, size=size)
    im = rng.normal(0.0, scatter_sd, size=size)
    result: ArrayF64 = np.asarray(re * re + im * im, dtype=float)
    return result


def uav_point(e_u: ArrayLike, altitude: float) -> ArrayF64:
    xy = np.asarray(e_u, dtype=float)
    return np.array([xy[0], xy[1], altitude], dtype=float)


def channel_gain(
    uav: ArrayLike, vue: ArrayLike, spec: ChannelSpec, fading: ArrayLike
) -> ArrayF64:
    """h = phi |psi|^2 / (theta D)^2 for a 3-D UAV point and 2-D ground point(s)."""
    uav_arr = np.asarray(uav, dtype=float)
    vue_arr = np.asarray(vue, dtype=float)

    dx = vue_arr[..., 0] - uav_arr[..., 0]
    dy = vue_arr[..., 1] - uav_arr[..., 1]
    dz = uav_arr[..., 2]
    dist_sq = dx * dx + dy * dy + dz * dz
    if np.any(dist_sq <= 0):
        raise DegenerateGeometryError("UAV-to-VUE distance is zero")

    result: ArrayF64 = np.asarray(
        spec.phi * np.asarray(fading, dtype=float) / (spec.theta**2 * dist_sq), dtype=float
    )
    return result


def snr(h: ArrayLike, cfg: ExperimentConfig) -> ArrayF64:
    # equal power and bandwidth split across V VUEs cancels in the ratio
    result: ArrayF64 = np.asarray(h, dtype=float) * (
        cfg.tx_power_w / (cfg.noise_psd_w_per_hz * cfg.bandwidth_hz)
    )
    return result


def slot_delay(a_bits: ArrayLike, n_vues: int, h: ArrayLike, cfg: ExperimentConfig) -> ArrayF64:
    """
    T = A V / (W log2(1 + P h / (N0 W))).

    Returns +inf where h == 0 (no capacity); callers must not keep such values as samples.
    """
    a = np.asarray(a_bits, dtype=float)
    if np.any(a <= 0) or n_vues <= 0 or cfg.bandwidth_hz <= 0:
        raise DomainError(
            f"slot_delay needs positive A, V and W; got A={a!r}, V={n_vues}, W={cfg.bandwidth_hz}"
        )
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0) or np.any(np.isnan(h_arr)):
        raise DomainError("Channel gain must be nonnegative")

    rate = cfg.bandwidth_hz * np.log2(1.0 + snr(h_arr, cfg))
    with np.errstate(divide="ignore"):
        result: ArrayF64 = np.asarray(a * n_vues / rate, dtype=float)
    return result


def normalized_slot_delay(h: ArrayLike, cfg: ExperimentConfig) -> ArrayF64:
    """A_1 / (W log2(1 + P h / (N0 W))): the slot delay with the V factor removed."""
    return slot_delay(cfg.a1_bits, 1, h, cfg)
