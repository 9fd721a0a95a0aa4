from __future__ import annotations

import logging
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import ValidationError

from urllc_uav.core.errors import FitError
from urllc_uav.evt.gev import loglik_terms
from urllc_uav.evt.schema import FitReport, GevParams

logger = logging.getLogger(__name__)

ArrayF64 = NDArray[np.float64]

MIN_SAMPLES = 50
MAX_HALVINGS = 60
EULER_GAMMA = 0.5772156649015329


def _mean_terms(z: ArrayF64, theta: ArrayF64) -> tuple[float, ArrayF64]:
    mu, sigma, xi = (float(v) for v in theta)
    ll, d_mu, d_sigma, d_xi = loglik_terms((z - mu) / sigma, xi, sigma)
    grad = np.array([d_mu.mean(), d_sigma.mean(), d_xi.mean()])
    return float(ll.mean()), grad


def _in_support(theta: ArrayF64, z_min: float, z_max: float) -> bool:
    mu, sigma, xi = (float(v) for v in theta)
    if not (sigma > 0 and math.isfinite(mu) and math.isfinite(xi)):
        return False
    # 1 + xi (z - mu) / sigma is linear in z, so the extremes decide
    edge = z_min if xi > 0 else z_max
    return 1.0 + xi * (edge - mu) / sigma > 0


def moment_start(mean: float, sd: float, xi0: float = 0.1) -> GevParams:
    sigma0 = math.sqrt(6.0) * sd / math.pi
    return GevParams(mu=mean - EULER_GAMMA * sigma0, sigma=sigma0, xi=xi0)


def _validated(samples: ArrayLike) -> ArrayF64:
    arr = np.asarray(samples, dtype=float).ravel()
    if arr.size < MIN_SAMPLES:
        raise FitError(f"GEV fit needs at least {MIN_SAMPLES} samples; got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise FitError("GEV fit samples must all be finite")
    if np.ptp(arr) == 0:
        raise FitError("GEV fit samples are all identical")
    return arr


def fit_gev(
    samples: ArrayLike,
    nu: float = 5e-4,
    *,
    max_iter: int = 100_000,
    tol: float = 1e-9,
) -> FitReport:
    """
    Maximum-likelihood GEV fit by plain gradient ascent with rate `nu`.

    Iterates run on the standardized samples z = (t - mean) / sd and are mapped back with
    mu = mean + sd mu_z, sigma = sd sigma_z, xi unchanged, so the fit is affine
    equivariant. A step that would leave a sample outside the support is halved (up to 60
    times) and the halving is counted. Stops when the mean log-likelihood changes by less
    than `tol` on a full-rate step, or after `max_iter` iterations.
    """
    if nu <= 0:
        raise FitError(f"Learning rate must be positive; got {nu}")

    t = _validated(samples)
    mean = float(t.mean())
    sd = float(t.std(ddof=1))
    z = (t - mean) / sd
    z_min, z_max = float(z.min()), float(z.max())

    start_z = moment_start(0.0, 1.0)
    theta = np.array([start_z.mu, start_z.sigma, start_z.xi])
    if not _in_support(theta, z_min, z_max):
        theta[2] = 0.0  # the Gumbel law has unbounded support
        logger.debug("Moment start out of support; starting from the Gumbel limit")
    start = GevParams(mu=mean + sd * theta[0], sigma=sd * theta[1], xi=float(theta[2]))

    ll, grad = _mean_terms(z, theta)
    repaired = 0
    converged = False
    iterations = 0

    while iterations < max_iter:
        iterations += 1
        step = nu
        halvings = 0
        candidate = theta + step * grad
        while not _in_support(candidate, z_min, z_max):
            halvings += 1
            if halvings > MAX_HALVINGS:
                break
            step *= 0.5
            candidate = theta + step * grad
        if halvings > MAX_HALVINGS:
            logger.warning("No in-support step after %d halvings; stopping", MAX_HALVINGS)
            break
        repaired += halvings

        theta = candidate
        ll_new, grad = _mean_terms(z, theta)
        delta = abs(ll_new - ll)
        ll = ll_new
        if halvings == 0 and delta < tol:
            converged = True
            break

    if not converged:
        logger.warning(
            "GEV fit stopped after %d iterations without meeting tol=%g", iterations, tol
        )

    try:
        params = GevParams(mu=mean + sd * theta[0], sigma=sd * theta[1], xi=float(theta[2]))
    except ValidationError as e:
        raise FitError(f"GEV fit left the admissible parameter range: {theta!r}") from e

    return FitReport(
        params=params,
        start=start,
        iterations=iterations,
        final_loglik=ll - math.log(sd),
        converged=converged,
        support_violations_repaired=repaired,
        gradient_norm=float(np.linalg.norm(grad)),
        n_samples=int(t.size),
    )
