from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, stats

from urllc_uav.core.errors import DomainError, SupportError
from urllc_uav.evt.schema import XI_EPS, GevParams

ArrayF64 = NDArray[np.float64]

# below this |xi * y| the shape derivative uses a power series
_SERIES_CUTOFF = 1e-2


def _support(t: ArrayLike, p: GevParams) -> tuple[ArrayF64, ArrayF64]:
    y = (np.asarray(t, dtype=float) - p.mu) / p.sigma
    return y, 1.0 + p.xi * y


def gev_ccdf(t: ArrayLike, p: GevParams) -> ArrayF64:
    """
    Pr{T > t} = 1 - exp(-s^(-1/xi)), s = 1 + xi (t - mu) / sigma.

    Outside the support the limit value is returned: 1 below the lower endpoint (xi > 0),
    0 above the upper endpoint (xi < 0).
    """
    y, s = _support(t, p)
    if p.is_gumbel:
        result: ArrayF64 = -np.expm1(-np.exp(-y))
        return result

    inside = s > 0
    s_safe = np.where(inside, s, 1.0)
    tail = np.exp(-np.log(s_safe) / p.xi)
    outside_value = 1.0 if p.xi > 0 else 0.0
    result = np.where(inside, -np.expm1(-tail), outside_value)
    return result


def gev_cdf(t: ArrayLike, p: GevParams) -> ArrayF64:
    y, s = _support(t, p)
    if p.is_gumbel:
        result: ArrayF64 = np.exp(-np.exp(-y))
        return result

    inside = s > 0
    s_safe = np.where(inside, s, 1.0)
    tail = np.exp(-np.log(s_safe) / p.xi)
    outside_value = 0.0 if p.xi > 0 else 1.0
    result = np.where(inside, np.exp(-tail), outside_value)
    return result


def gev_logpdf(t: ArrayLike, p: GevParams) -> ArrayF64:
    """ln f(t); -inf outside the support."""
    y, s = _support(t, p)
    if p.is_gumbel:
        result: ArrayF64 = -math.log(p.sigma) - y - np.exp(-y)
        return result

    inside = s > 0
    log_s = np.log(np.where(inside, s, 1.0))
    value = -math.log(p.sigma) - (1.0 + 1.0 / p.xi) * log_s - np.exp(-log_s / p.xi)
    result = np.where(inside, value, -np.inf)
    return result


def _h_series(u: ArrayF64) -> ArrayF64:
    # (ln(1+u) - u/(1+u)) / u^2 = sum_n (-1)^n (n+1)/(n+2) u^n
    acc = np.zeros_like(u)
    for n in range(8, -1, -1):
        acc = acc * u + (-1) ** n * (n + 1) / (n + 2)
    return acc


def loglik_terms(
    y: ArrayF64, xi: float, sigma: float
) -> tuple[ArrayF64, ArrayF64, ArrayF64, ArrayF64]:
    """Per-sample (ln f, d/dmu, d/dsigma, d/dxi) for in-support standardized y."""
    if abs(xi) < XI_EPS:
        w = np.exp(-y)
        one_minus_w = -np.expm1(-y)
        ll = -math.log(sigma) - y - w
        d_mu = one_minus_w / sigma
        d_sigma = (y * one_minus_w - 1.0) / sigma
        d_xi = 0.5 * y * y * one_minus_w - y
        return ll, d_mu, d_sigma, d_xi

    u = xi * y
    s = 1.0 + u
    log_s = np.log1p(u)
    w = np.exp(-log_s / xi)

    ll = -math.log(sigma) - (1.0 + 1.0 / xi) * log_s - w
    d_mu = (1.0 + xi - w) / (sigma * s)
    d_sigma = (y * (1.0 + xi - w) / s - 1.0) / sigma

    small = np.abs(u) < _SERIES_CUTOFF
    u_safe = np.where(small, 1.0, u)
    h = np.where(small, _h_series(u), (log_s - u / s) / (u_safe * u_safe))
    d_xi = -np.expm1(-log_s / xi) * y * y * h - y / s
    return ll, d_mu, d_sigma, d_xi


def gev_loglik_grad(t: ArrayLike, p: GevParams) -> ArrayF64:
    """
    Partial derivatives of ln f with respect to (mu, sigma, xi).

    Returns an array of shape (3,) + shape(t). The xi component is evaluated as
    (1 - s^(-1/xi)) g(u) / xi^2 - y / s with u = xi y and g(u) = ln(1+u) - u/(1+u),
    which equals the textbook form and stays continuous through the Gumbel switch.
    """
    y, s = _support(t, p)
    if not p.is_gumbel and np.any(s <= 0):
        raise SupportError(f"Sample outside the support of {p!r}")
    _, d_mu, d_sigma, d_xi = loglik_terms(y, p.xi, p.sigma)
    return np.stack([d_mu, d_sigma, d_xi])


def mean_loglik(samples: ArrayLike, p: GevParams) -> float:
    return float(np.mean(gev_logpdf(samples, p)))


def gev_quantile(q: ArrayLike, p: GevParams) -> ArrayF64:
    """t with CDF(t) = q: mu + sigma ((-ln q)^(-xi) - 1) / xi."""
    q_arr = np.asarray(q, dtype=float)
    if np.any((q_arr <= 0) | (q_arr >= 1)) or np.any(np.isnan(q_arr)):
        raise DomainError(f"Quantile level must lie in (0, 1); got {q!r}")

    log_l = np.log(-np.log(q_arr))
    if p.is_gumbel:
        result: ArrayF64 = p.mu - p.sigma * log_l
        return result
    result = p.mu + p.sigma * np.expm1(-p.xi * log_l) / p.xi
    return result


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1); got {epsilon}")


def zeta_transform(xi: ArrayLike, epsilon: float) -> ArrayF64:
    """
    zeta = (epsilon^(-xi) - 1) / xi, with the continuous limit -ln(epsilon) at xi = 0.

    Positive and strictly increasing in xi.
    """
    _check_epsilon(epsilon)
    xi_arr = np.asarray(xi, dtype=float)
    big_l = -math.log(epsilon)
    x = xi_arr * big_l
    zero = x == 0
    x_safe = np.where(zero, 1.0, x)
    result: ArrayF64 = np.where(zero, big_l, big_l * np.expm1(x_safe) / x_safe)
    return result


def zeta_inverse(zeta: float, epsilon: float) -> float:
    """Shape xi with zeta_transform(xi, epsilon) == zeta."""
    _check_epsilon(epsilon)
    if not (zeta > 0 and math.isfinite(zeta)):
        raise DomainError(f"zeta must be positive and finite; got {zeta}")

    def f(xi: float) -> float:
        return float(zeta_transform(xi, epsilon)) - zeta

    lo, hi = -1.0, 1.0
    for _ in range(200):
        if f(lo) < 0:
            break
        lo *= 2.0
    else:
        raise DomainError(f"zeta={zeta} is below the range of the transform")
    for _ in range(200):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:
        raise DomainError(f"zeta={zeta} is above the range of the transform")

    if f(0.0) == 0.0:
        return 0.0
    root: float = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return root


def scale_params(p: GevParams, factor: float) -> GevParams:
    """Law of c * T when T ~ GEV(mu, sigma, xi): GEV(c mu, c sigma, xi)."""
    if factor <= 0:
        raise DomainError(f"Scale factor must be positive; got {factor}")
    return GevParams(mu=p.mu * factor, sigma=p.sigma * factor, xi=p.xi)


def ks_distance(samples: ArrayLike, p: GevParams) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of `samples` and GEV `p`."""
    data = np.asarray(samples, dtype=float)
    result = stats.kstest(data, lambda x: gev_cdf(x, p))
    return float(result.statistic)
