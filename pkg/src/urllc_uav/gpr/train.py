from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg, optimize
from scipy.stats import qmc
from sklearn.exceptions import ConvergenceWarning
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import RBF, ConstantKernel, Kernel, Sum, WhiteKernel

from urllc_uav.core.errors import ConditioningError, IncompleteDatasetError
from urllc_uav.evt.gev import zeta_transform
from urllc_uav.evt.schema import GevParams
from urllc_uav.gpr.kernel import kernel_matrix, sq_distances
from urllc_uav.gpr.schema import GprHyper, GprModel, ZoneModel
from urllc_uav.scenario.area import ZoneId

logger = logging.getLogger(__name__)

ArrayF64 = NDArray[np.float64]
ChoFactor = tuple[ArrayF64, bool]
Optimizer = Callable[
    [Callable[..., tuple[float, ArrayF64]], ArrayF64, ArrayF64], tuple[ArrayF64, float]
]

JITTER_REL = 1e-10
MAX_JITTER_TRIES = 12
RESIDUAL_TOL = 1e-10


def training_grid(half_width: float, n: int) -> ArrayF64:
    """n x n uniform grid over [-half_width, half_width]^2, x varying fastest."""
    if n < 1:
        raise ValueError(f"Grid side must be at least 1; got {n}")
    axis = np.linspace(-half_width, half_width, n)
    xx, yy = np.meshgrid(axis, axis, indexing="xy")
    return np.column_stack([xx.ravel(), yy.ravel()])


def _factor(
    matrix: ArrayF64, gamma: float, *, log_jitter: bool = True
) -> tuple[ChoFactor, float]:
    """Cholesky factor of `matrix`, adding growing diagonal jitter if it is not SPD."""
    try:
        return linalg.cho_factor(matrix, lower=True, check_finite=True), 0.0
    except linalg.LinAlgError:
        pass

    jitter = JITTER_REL * gamma
    eye = np.eye(matrix.shape[0])
    for _ in range(MAX_JITTER_TRIES):
        try:
            cf = linalg.cho_factor(matrix + jitter * eye, lower=True, check_finite=True)
        except linalg.LinAlgError:
            jitter *= 10.0
            continue
        if log_jitter:
            logger.warning("Covariance not positive definite; added jitter %.3g", jitter)
        return cf, jitter

    raise ConditioningError(
        f"Covariance matrix stays singular after jitter up to {jitter / 10.0:.3g}"
    )


def train_model(positions: ArrayLike, targets: ArrayLike, hyper: GprHyper) -> GprModel:
    """Solve (C + lam I) alpha = targets; any jitter is folded into the stored `lam`."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    y = np.asarray(targets, dtype=float).ravel()
    if pts.shape[0] != y.shape[0]:
        raise ValueError(f"{pts.shape[0]} positions but {y.shape[0]} targets")
    if pts.shape[0] < 1:
        raise ValueError("At least one training position is required")

    matrix = kernel_matrix(pts, pts, hyper) + hyper.lam * np.eye(len(y))
    cf, jitter = _factor(matrix, hyper.gamma)
    if jitter > 0:
        hyper = GprHyper(gamma=hyper.gamma, ell=hyper.ell, lam=hyper.lam + jitter)
        matrix = matrix + jitter * np.eye(len(y))

    alpha = linalg.cho_solve(cf, y)
    # one step of iterative refinement
    alpha = alpha + linalg.cho_solve(cf, y - matrix @ alpha)

    scale = float(np.linalg.norm(y))
    residual = float(np.linalg.norm(matrix @ alpha - y)) / scale if scale > 0 else 0.0
    if residual >= RESIDUAL_TOL:
        logger.warning("GPR weight solve residual %.3g exceeds %.0e", residual, RESIDUAL_TOL)

    return GprModel(
        train_positions=tuple((float(p[0]), float(p[1])) for p in pts),
        targets=tuple(float(v) for v in y),
        hyper=hyper,
        alpha=tuple(float(v) for v in alpha),
    )


def _around(value: float) -> tuple[float, float]:
    return value * 1e-6, value * 1e6


def gp_kernel(hyper: GprHyper, log_bounds: Sequence[tuple[float, float]] | None = None) -> Kernel:
    """
    scikit-learn form of the kernel: ConstantKernel(gamma) * RBF(sqrt(ell)) + WhiteKernel(lam).

    `log_bounds` is a (ln gamma, ln ell, ln lam) box as returned by `hyper_bounds`. The white
    term is left out when lam is 0.
    """
    if log_bounds is None:
        b_gamma, b_ell, b_lam = _around(hyper.gamma), _around(hyper.ell), _around(hyper.lam)
    else:
        b_gamma, b_ell, b_lam = ((math.exp(lo), math.exp(hi)) for lo, hi in log_bounds)

    signal = ConstantKernel(hyper.gamma, constant_value_bounds=b_gamma) * RBF(
        math.sqrt(hyper.ell), length_scale_bounds=(math.sqrt(b_ell[0]), math.sqrt(b_ell[1]))
    )
    if hyper.lam == 0:
        return signal
    return signal + WhiteKernel(hyper.lam, noise_level_bounds=b_lam)


def hyper_from_kernel(kernel: Kernel) -> GprHyper:
    if isinstance(kernel, Sum):
        signal, lam = kernel.k1, float(kernel.k2.noise_level)
    else:
        signal, lam = kernel, 0.0
    return GprHyper(
        gamma=float(signal.k1.constant_value), ell=float(signal.k2.length_scale) ** 2, lam=lam
    )


def _regressor(kernel: Kernel, optimizer: Optimizer | None = None) -> GaussianProcessRegressor:
    # the white term carries lam; zero mean, no target normalization
    return GaussianProcessRegressor(
        kernel=kernel, alpha=0.0, optimizer=optimizer, normalize_y=False
    )


def _fit_regressor(gp: GaussianProcessRegressor, pts: ArrayF64, y: ArrayF64) -> None:
    try:
        gp.fit(pts, y)
    except np.linalg.LinAlgError as e:
        raise ConditioningError(f"GPR covariance is not positive definite: {e}") from e


def log_marginal_likelihood_and_grad(
    positions: ArrayLike, targets: ArrayLike, hyper: GprHyper
) -> tuple[float, ArrayF64]:
    """Log marginal likelihood and its gradient in (ln gamma, ln ell, ln lam)."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    y = np.asarray(targets, dtype=float).ravel()
    gp = _regressor(gp_kernel(hyper))
    _fit_regressor(gp, pts, y)

    lml, grad = gp.log_marginal_likelihood(gp.kernel_.theta, eval_gradient=True, clone_kernel=False)
    grad = np.asarray(grad, dtype=float)
    if hyper.lam == 0:
        grad = np.append(grad, 0.0)
    # d/d ln ell = 1/2 d/d ln(length scale)
    grad[1] *= 0.5
    return float(lml), grad


def log_marginal_likelihood(positions: ArrayLike, targets: ArrayLike, hyper: GprHyper) -> float:
    return log_marginal_likelihood_and_grad(positions, targets, hyper)[0]


def log_marginal_likelihood_grad(
    positions: ArrayLike, targets: ArrayLike, hyper: GprHyper
) -> ArrayF64:
    return log_marginal_likelihood_and_grad(positions, targets, hyper)[1]


def _target_scale(y: ArrayF64) -> float:
    scale = float(np.mean(y * y))
    return scale if scale > 0 else 1.0


def _pair_distances(pts: ArrayF64) -> tuple[float, float]:
    d2 = sq_distances(pts, pts)
    off = d2[~np.eye(len(pts), dtype=bool)]
    off = off[off > 0]
    if off.size == 0:
        raise ConditioningError("All training positions coincide")
    return float(off.min()), float(off.max())


def default_hyper(positions: ArrayLike, targets: ArrayLike) -> GprHyper:
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    y = np.asarray(targets, dtype=float).ravel()
    scale = _target_scale(y)
    _, d2_max = _pair_distances(pts)
    return GprHyper(gamma=scale, ell=d2_max / 16.0, lam=1e-6 * scale)


def hyper_bounds(positions: ArrayLike, targets: ArrayLike) -> list[tuple[float, float]]:
    """Search box for (ln gamma, ln ell, ln lam), scaled to the data."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    y = np.asarray(targets, dtype=float).ravel()
    log_scale = math.log(_target_scale(y))
    d2_min, d2_max = _pair_distances(pts)
    return [
        (log_scale - math.log(1e4), log_scale + math.log(1e4)),
        (math.log(d2_min / 4.0), math.log(d2_max * 100.0)),
        (log_scale - math.log(1e12), log_scale),
    ]


def halton_restarts(restarts: int) -> Optimizer:
    """
    `optimizer=` callable for GaussianProcessRegressor: L-BFGS-B from the kernel's initial
    theta, then from `restarts - 1` unscrambled Halton points in the kernel's bounds.
    Returns the best (theta, -lml) found, never worse than the initial theta.
    """

    def optimizer(
        obj_func: Callable[..., tuple[float, ArrayF64]],
        initial_theta: ArrayF64,
        bounds: ArrayF64,
    ) -> tuple[ArrayF64, float]:
        def objective(theta: ArrayF64) -> tuple[float, ArrayF64]:
            value, grad = obj_func(theta, eval_gradient=True)
            if not np.isfinite(value):
                return 1e300, np.zeros_like(theta)
            return float(value), np.asarray(grad, dtype=float)

        starts = [np.asarray(initial_theta, dtype=float)]
        if restarts > 1:
            sampler = qmc.Halton(d=len(initial_theta), scramble=False)
            sampler.fast_forward(1)  # the first Halton point is the origin
            starts.extend(qmc.scale(sampler.random(restarts - 1), bounds[:, 0], bounds[:, 1]))

        best_theta, best_value = starts[0], objective(starts[0])[0]
        for i, x0 in enumerate(starts):
            result = optimize.minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=bounds)
            logger.debug("GPR restart %d: -lml=%.6g (%s)", i, result.fun, result.message)
            if result.fun < best_value:
                best_value, best_theta = float(result.fun), np.asarray(result.x, dtype=float)
        return best_theta, best_value

    return optimizer


def fit_hyperparameters(
    positions: ArrayLike, targets: ArrayLike, restarts: int = 8
) -> GprHyper:
    """
    Maximize the log marginal likelihood over (gamma, ell, lam).

    The search runs in scikit-learn's log-hyperparameter space inside the data-scaled box of
    `hyper_bounds`, starting from `default_hyper` and then from Halton points.
    """
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    y = np.asarray(targets, dtype=float).ravel()
    if len(np.unique(pts, axis=0)) < 3:
        raise ConditioningError(
            f"Hyperparameter fit needs at least 3 distinct positions; got {len(pts)} points"
        )
    if restarts < 1:
        raise ValueError(f"restarts must be at least 1; got {restarts}")

    bounds = hyper_bounds(pts, y)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    default = default_hyper(pts, y)
    x0 = np.clip(np.log([default.gamma, default.ell, default.lam]), lo, hi)
    start = GprHyper(gamma=math.exp(x0[0]), ell=math.exp(x0[1]), lam=math.exp(x0[2]))

    gp = _regressor(gp_kernel(start, bounds), optimizer=halton_restarts(restarts))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        _fit_regressor(gp, pts, y)
    for w in caught:
        logger.debug("GPR hyperparameter search: %s", w.message)

    hyper = hyper_from_kernel(gp.kernel_)
    logger.debug("GPR hyperparameters %s, lml=%.6g", hyper, gp.log_marginal_likelihood_value_)
    return hyper


def _zone_hyper(pts: ArrayF64, y: ArrayF64, restarts: int) -> GprHyper:
    if len(pts) >= 3:
        return fit_hyperparameters(pts, y, restarts)
    if len(pts) == 2:
        return default_hyper(pts, y)
    # a single point: the prediction is the target at that point, decaying away from it
    return GprHyper(gamma=_target_scale(y), ell=1.0, lam=0.0)


def build_zone_models(
    fits: Mapping[tuple[ZoneId, int], GevParams],
    positions: ArrayLike,
    *,
    zones: Sequence[ZoneId],
    epsilon: float,
    restarts: int = 8,
) -> list[ZoneModel]:
    """
    Train the (mu, sigma, zeta) regressors of every zone.

    `fits` maps (zone, position index) to the fitted GEV law at that training position.
    """
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    missing = [(z, k) for z in zones for k in range(len(pts)) if (z, k) not in fits]
    if missing:
        shown = ", ".join(f"(zone {z}, position {k})" for z, k in missing[:10])
        more = f" and {len(missing) - 10} more" if len(missing) > 10 else ""
        raise IncompleteDatasetError(f"Missing GEV fits: {shown}{more}")

    models: list[ZoneModel] = []
    for zone in zones:
        params = [fits[(zone, k)] for k in range(len(pts))]
        mu = np.array([p.mu for p in params])
        sigma = np.array([p.sigma for p in params])
        zeta = zeta_transform([p.xi for p in params], epsilon)

        trained = []
        for name, y in (("mu", mu), ("sigma", sigma), ("zeta", zeta)):
            hyper = _zone_hyper(pts, y, restarts)
            trained.append(train_model(pts, y, hyper))
            logger.info("Trained zone %d %s model: %s", zone, name, trained[-1].hyper)

        models.append(
            ZoneModel(
                zone=zone, model_mu=trained[0], model_sigma=trained[1], model_zeta=trained[2]
            )
        )
    return models
