from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from urllc_uav.core.errors import (
    ConfigurationError,
    DomainError,
    InfeasibleChannelError,
    MissingZoneModelError,
)
from urllc_uav.evt.gev import scale_params, zeta_inverse
from urllc_uav.evt.schema import XI_EPS, XI_MAX_ABS, GevParams
from urllc_uav.gpr.kernel import predict_mean, predict_mean_grad
from urllc_uav.gpr.schema import ZoneModel
from urllc_uav.placement.schema import EffectiveParams, VueContext
from urllc_uav.scenario.area import ZoneId
from urllc_uav.scenario.experiment import Resolution

logger = logging.getLogger(__name__)

ArrayF64 = NDArray[np.float64]

SIGMA_MIN = 1e-6
ZETA_MIN = 1e-6


@dataclass(frozen=True, slots=True)
class ZoneField:
    """Clamped (mu, sigma, zeta) of one zone at a UAV position, with position gradients."""

    mu: float
    sigma: float
    zeta: float
    grad_mu: ArrayF64
    grad_sigma: ArrayF64
    grad_zeta: ArrayF64
    clamps: int


def zone_field(model: ZoneModel, e_u: ArrayLike, *, with_grad: bool = True) -> ZoneField:
    e = np.asarray(e_u, dtype=float)
    zero = np.zeros(2)

    mu = predict_mean(model.model_mu, e)
    sigma = predict_mean(model.model_sigma, e)
    zeta = predict_mean(model.model_zeta, e)

    grad_mu = predict_mean_grad(model.model_mu, e) if with_grad else zero
    grad_sigma = predict_mean_grad(model.model_sigma, e) if with_grad else zero
    grad_zeta = predict_mean_grad(model.model_zeta, e) if with_grad else zero

    clamps = 0
    if sigma < SIGMA_MIN:
        sigma, grad_sigma, clamps = SIGMA_MIN, zero, clamps + 1
    if zeta < ZETA_MIN:
        zeta, grad_zeta, clamps = ZETA_MIN, zero, clamps + 1

    return ZoneField(mu, sigma, zeta, grad_mu, grad_sigma, grad_zeta, clamps)


def require_zone_models(
    zone_models: Mapping[ZoneId, ZoneModel], vues: Sequence[VueContext]
) -> None:
    missing = sorted({v.zone for v in vues} - set(zone_models))
    if missing:
        raise MissingZoneModelError(f"No trained zone model for zones {missing}")


def effective_params(
    zone_models: Mapping[ZoneId, ZoneModel], e_u: ArrayLike, vues: Sequence[VueContext]
) -> EffectiveParams:
    """
    Per-VUE (mu, sigma, zeta) predicted by the model of the zone each VUE is in.

    sigma and zeta are clamped below at SIGMA_MIN and ZETA_MIN; `clamps` counts the VUEs
    and parameters where a clamp engaged.
    """
    require_zone_models(zone_models, vues)
    fields = {z: zone_field(zone_models[z], e_u, with_grad=False) for z in {v.zone for v in vues}}

    mu = np.array([fields[v.zone].mu for v in vues], dtype=float)
    sigma = np.array([fields[v.zone].sigma for v in vues], dtype=float)
    zeta = np.array([fields[v.zone].zeta for v in vues], dtype=float)
    clamps = sum(fields[v.zone].clamps for v in vues)
    if clamps:
        logger.debug("Clamped %d predicted parameters at %s", clamps, e_u)
    return EffectiveParams(mu=mu, sigma=sigma, zeta=zeta, clamps=clamps)


def optimal_payload(mu: float, sigma: float, zeta: float, a: float) -> float:
    """B* = a / (sigma zeta + mu): the largest payload meeting the delay constraint."""
    denominator = sigma * zeta + mu
    if not denominator > 0:
        raise InfeasibleChannelError(
            f"sigma*zeta + mu must be positive; got {denominator:.6g} "
            f"(mu={mu:.6g}, sigma={sigma:.6g}, zeta={zeta:.6g})"
        )
    return a / denominator


def select_resolution(b_star: float, resolutions: Sequence[Resolution]) -> tuple[int, bool]:
    """
    Largest 1-based level whose size fits in `b_star`, and whether any level fits.

    When even the smallest level exceeds `b_star` the result is (1, False).
    """
    if not resolutions:
        raise ConfigurationError("Resolution list is empty")
    fitting = [i for i, r in enumerate(resolutions, start=1) if r.bits <= b_star]
    if not fitting:
        return 1, False
    return fitting[-1], True


def shape_from_zeta(zeta: float, epsilon: float) -> float:
    """xi for a predicted zeta; a zeta near the clamp has no usable GEV shape."""
    try:
        xi = zeta_inverse(zeta, epsilon)
    except DomainError as e:
        raise InfeasibleChannelError(f"No GEV shape for zeta={zeta:.6g}: {e}") from e
    if not (math.isfinite(xi) and abs(xi) < XI_MAX_ABS):
        raise InfeasibleChannelError(
            f"zeta={zeta:.6g} maps to shape xi={xi:.6g}, outside (-{XI_MAX_ABS}, {XI_MAX_ABS})"
        )
    return xi


def violation_tail(
    mu: float, sigma: float, zeta: float, b: float, a: float, epsilon: float
) -> float:
    """
    (1 + xi (a/B - mu) / sigma)^(-1/xi) with xi recovered from zeta.

    This is the tail term of the per-VUE delay constraint at payload B; it equals epsilon at
    B = B*.
    """
    xi = shape_from_zeta(zeta, epsilon)
    y = (a / b - mu) / sigma
    if abs(xi) < XI_EPS:
        return math.exp(-y)
    s = 1.0 + xi * y
    if s <= 0:
        return math.inf if xi > 0 else 0.0
    return math.exp(-math.log(s) / xi)


def delay_law(
    mu: float, sigma: float, zeta: float, b: float, *, a1_bits: float, n_vues: int, epsilon: float
) -> GevParams:
    """
    GEV law of a VUE's block-maximum delay when it is sent payloads of B bits.

    The normalized law (mu, sigma, xi) scales by V B / A_1.
    """
    normalized = GevParams(mu=mu, sigma=sigma, xi=shape_from_zeta(zeta, epsilon))
    return scale_params(normalized, n_vues * b / a1_bits)
