from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from urllc_uav.gpr.schema import GprHyper, GprModel

ArrayF64 = NDArray[np.float64]


def sq_distances(p: ArrayLike, q: ArrayLike) -> ArrayF64:
    """Pairwise squared Euclidean distances between (n, 2) and (m, 2) point sets."""
    a = np.atleast_2d(np.asarray(p, dtype=float))
    b = np.atleast_2d(np.asarray(q, dtype=float))
    diff = a[:, None, :] - b[None, :, :]
    result: ArrayF64 = np.einsum("ijk,ijk->ij", diff, diff)
    return result


def kernel(p: ArrayLike, q: ArrayLike, hyper: GprHyper) -> float:
    """gamma exp(-||p - q||^2 / (2 ell))."""
    d = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    return float(hyper.gamma * np.exp(-float(d @ d) / (2.0 * hyper.ell)))


def kernel_matrix(p: ArrayLike, q: ArrayLike, hyper: GprHyper) -> ArrayF64:
    result: ArrayF64 = hyper.gamma * np.exp(-sq_distances(p, q) / (2.0 * hyper.ell))
    return result


def predict_mean(model: GprModel, e_u: ArrayLike) -> float:
    """sum_k alpha_k k(e_u, e_k)."""
    c = kernel_matrix(e_u, model.positions_array, model.hyper)[0]
    return float(c @ model.alpha_array)


def predict_mean_grad(model: GprModel, e_u: ArrayLike) -> ArrayF64:
    """Gradient of `predict_mean` with respect to the query position, per meter."""
    e = np.asarray(e_u, dtype=float)
    diff = e[None, :] - model.positions_array
    c = kernel_matrix(e, model.positions_array, model.hyper)[0]
    weights = model.alpha_array * c
    result: ArrayF64 = -(weights @ diff) / model.hyper.ell
    return result
