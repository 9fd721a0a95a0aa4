from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from urllc_uav.core.errors import (
    InfeasibleChannelError,
    InfeasibleStartError,
    ProjectionError,
)
from urllc_uav.gpr.schema import ZoneModel
from urllc_uav.placement.payload import (
    effective_params,
    optimal_payload,
    require_zone_models,
    select_resolution,
    zone_field,
)
from urllc_uav.placement.schema import PlacementSolution, VueContext
from urllc_uav.scenario.area import ZoneId
from urllc_uav.scenario.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

ArrayF64 = NDArray[np.float64]

MAX_BISECTIONS = 60
MAX_STEP_HALVINGS = 60
START_RINGS = 8
START_ANGLES = 16


class PlacementProblem:
    """
    The continuous UAV placement problem for a fixed set of VUEs.

    Minimizes sum_i -a_i / (sigma_i zeta_i + mu_i) over UAV positions inside the disk of
    radius `d_th` around `origin`, subject to B*_i >= `a1_bits` for every VUE.
    """

    def __init__(
        self,
        zone_models: Mapping[ZoneId, ZoneModel],
        vues: Sequence[VueContext],
        *,
        origin: ArrayLike,
        d_th: float,
        a1_bits: float,
    ) -> None:
        require_zone_models(zone_models, vues)
        self.zone_models = zone_models
        self.vues = list(vues)
        self.origin = np.asarray(origin, dtype=float)
        self.d_th = float(d_th)
        self.a1_bits = float(a1_bits)

        self.zones = sorted({v.zone for v in self.vues})
        # per zone: total a over its VUEs and the smallest a (binds the payload constraint)
        self.a_sum = {z: sum(v.a for v in self.vues if v.zone == z) for z in self.zones}
        self.a_min = {z: min(v.a for v in self.vues if v.zone == z) for z in self.zones}

    def in_disk(self, e: ArrayF64) -> bool:
        d = e - self.origin
        return float(d @ d) <= self.d_th * self.d_th

    def payload_feasible(self, e: ArrayF64) -> bool:
        for z in self.zones:
            f = zone_field(self.zone_models[z], e, with_grad=False)
            den = f.sigma * f.zeta + f.mu
            if not den > 0 or self.a_min[z] / den < self.a1_bits:
                return False
        return True

    def feasible(self, e: ArrayF64) -> bool:
        return self.in_disk(e) and self.payload_feasible(e)

    def objective(self, e: ArrayF64) -> float:
        total = 0.0
        for z in self.zones:
            f = zone_field(self.zone_models[z], e, with_grad=False)
            den = f.sigma * f.zeta + f.mu
            if not den > 0:
                raise InfeasibleChannelError(f"Zone {z}: sigma*zeta + mu = {den:.6g} at {e}")
            total -= self.a_sum[z] / den
        return total

    def objective_and_grad(self, e: ArrayF64) -> tuple[float, ArrayF64]:
        total = 0.0
        grad = np.zeros(2)
        for z in self.zones:
            f = zone_field(self.zone_models[z], e)
            den = f.sigma * f.zeta + f.mu
            if not den > 0:
                raise InfeasibleChannelError(f"Zone {z}: sigma*zeta + mu = {den:.6g} at {e}")
            total -= self.a_sum[z] / den
            grad_den = f.grad_mu + f.zeta * f.grad_sigma + f.sigma * f.grad_zeta
            grad += (self.a_sum[z] / (den * den)) * grad_den
        return total, grad

    def to_disk(self, e: ArrayF64) -> ArrayF64:
        d = e - self.origin
        norm = float(np.linalg.norm(d))
        if norm <= self.d_th:
            return e
        projected: ArrayF64 = self.origin + d * (self.d_th / norm)
        while not self.in_disk(projected):
            projected = self.origin + (projected - self.origin) * (1.0 - 1e-15)
        return projected


def objective_and_grad(
    zone_models: Mapping[ZoneId, ZoneModel], e_u: ArrayLike, vues: Sequence[VueContext]
) -> tuple[float, ArrayF64]:
    """
    Placement objective sum_i -a_i / (sigma_i zeta_i + mu_i) and its position gradient.

    The gradient is sum_i a_i (grad mu_i + zeta_i grad sigma_i + sigma_i grad zeta_i)
    / den_i^2, so a descent step is e - delta * grad.
    """
    e = np.asarray(e_u, dtype=float)
    problem = PlacementProblem(zone_models, vues, origin=e, d_th=0.0, a1_bits=0.0)
    return problem.objective_and_grad(e)


def _project(
    problem: PlacementProblem, candidate: ArrayF64, anchor: ArrayF64 | None
) -> ArrayF64:
    if problem.feasible(candidate):
        return candidate

    on_disk = problem.to_disk(candidate)
    if problem.payload_feasible(on_disk):
        return on_disk

    if anchor is None or not problem.feasible(anchor):
        raise ProjectionError(f"No feasible anchor to backtrack toward from {candidate}")

    lo, hi = 0.0, 1.0  # fractions of the way from anchor to on_disk
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if problem.feasible(anchor + mid * (on_disk - anchor)):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise ProjectionError(f"No feasible point between {anchor} and {on_disk}")
    result: ArrayF64 = anchor + lo * (on_disk - anchor)
    return result


def project_feasible(
    e_candidate: ArrayLike,
    origin: ArrayLike,
    d_th: float,
    vues: Sequence[VueContext],
    zone_models: Mapping[ZoneId, ZoneModel],
    *,
    a1_bits: float,
    anchor: ArrayLike | None = None,
) -> ArrayF64:
    """
    Map a candidate UAV position back into the feasible set.

    A feasible candidate is returned unchanged. Otherwise it is first projected radially
    onto the displacement disk; if the payload constraint still fails, the segment toward
    the feasible `anchor` (the last accepted iterate) is bisected and the feasible end of
    the final bracket is returned.
    """
    problem = PlacementProblem(zone_models, vues, origin=origin, d_th=d_th, a1_bits=a1_bits)
    anchor_arr = None if anchor is None else np.asarray(anchor, dtype=float)
    return _project(problem, np.asarray(e_candidate, dtype=float), anchor_arr)


def feasible_start(problem: PlacementProblem) -> ArrayF64:
    """The origin if feasible, else the first feasible point on rings of growing radius."""
    if problem.feasible(problem.origin):
        return problem.origin.copy()

    for j in range(1, START_RINGS + 1):
        radius = problem.d_th * j / START_RINGS
        for k in range(START_ANGLES):
            angle = 2.0 * math.pi * k / START_ANGLES
            point = problem.origin + radius * np.array([math.cos(angle), math.sin(angle)])
            if problem.feasible(problem.to_disk(point)):
                return problem.to_disk(point)

    raise InfeasibleStartError(
        f"No feasible UAV position found within {problem.d_th:g} m of {problem.origin}"
    )


def solve_placement(
    zone_models: Mapping[ZoneId, ZoneModel],
    vues: Sequence[VueContext],
    config: ExperimentConfig,
) -> PlacementSolution:
    """
    Projected gradient descent over the UAV position, then per-VUE payload and resolution.

    Each iteration tries e - delta * grad, projects it when infeasible, and accepts it only
    if the objective does not increase; otherwise the step is halved for that iteration.
    Stops when the accepted move is shorter than `solver_step_tol_m`, when no accepted
    step exists, or after `solver_max_iter` iterations.
    """
    problem = PlacementProblem(
        zone_models,
        vues,
        origin=config.origin,
        d_th=config.d_th_m,
        a1_bits=config.a1_bits,
    )
    e = feasible_start(problem)
    value, grad = problem.objective_and_grad(e)
    initial = value
    trace = [value]

    iterations = 0
    projections = 0
    halvings = 0
    converged = False
    projection_failed = False

    while iterations < config.solver_max_iter:
        iterations += 1
        step = config.placement_step
        accepted: ArrayF64 | None = None
        accepted_value = value

        for _ in range(MAX_STEP_HALVINGS + 1):
            candidate = e - step * grad
            projected = not problem.feasible(candidate)
            try:
                point = _project(problem, candidate, e) if projected else candidate
            except ProjectionError:
                projection_failed = True
                step *= 0.5
                halvings += 1
                continue
            candidate_value = problem.objective(point)
            if candidate_value <= value:
                accepted, accepted_value = point, candidate_value
                projections += int(projected)
                break
            step *= 0.5
            halvings += 1

        if accepted is None:
            logger.info("No non-increasing step from %s; stopping at iteration %d", e, iterations)
            converged = True
            break

        move = float(np.linalg.norm(accepted - e))
        e, value = accepted, accepted_value
        trace.append(value)
        if move < config.solver_step_tol_m:
            converged = True
            break
        value, grad = problem.objective_and_grad(e)

    if not converged:
        logger.warning("Placement solver hit the iteration cap (%d)", config.solver_max_iter)

    params = effective_params(zone_models, e, vues)
    b_star = [
        optimal_payload(float(m), float(s), float(z), v.a)
        for m, s, z, v in zip(params.mu, params.sigma, params.zeta, vues, strict=True)
    ]
    picks = [select_resolution(b, config.resolutions) for b in b_star]

    logger.info(
        "Placed UAV at (%.3f, %.3f) after %d iterations; total payload %.6g -> %.6g bits",
        e[0],
        e[1],
        iterations,
        -initial,
        -value,
    )
    return PlacementSolution(
        scheme="proposed",
        e_u=(float(e[0]), float(e[1])),
        altitude=config.area.uav_altitude,
        b_star=tuple(b_star),
        levels=tuple(level for level, _ in picks),
        feasible_levels=tuple(ok for _, ok in picks),
        objective=float(sum(b_star)),
        iterations=iterations,
        projections_applied=projections,
        step_halvings=halvings,
        clamps=params.clamps,
        # the descent minimizes -sum(B*); report the payload sum itself
        initial_objective=-initial,
        objective_trace=tuple(-v for v in trace),
        converged=converged,
        projection_failed=projection_failed,
        feasible=problem.in_disk(e) and all(b >= config.a1_bits for b in b_star),
    )
