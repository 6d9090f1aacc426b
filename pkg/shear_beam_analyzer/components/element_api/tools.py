import logging
import math
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from ...config import (
    SHOOTING_BACKTRACKS,
    SHOOTING_CONTINUATION_LEVELS,
    SHOOTING_MAX_ITER,
    SHOOTING_SUFFICIENT_DECREASE,
    SHOOTING_TOL,
)
from ...exceptions import (
    BeamInputError,
    ContractViolationError,
    ElementBifurcationError,
    NumericalConvergenceError,
    ShootingConvergenceError,
    SingularMatrixError,
)
from ...models import (
    ArmLoad,
    BeamElement,
    BeamModel,
    DistributedLoad,
    ElementState,
    ElementTangent,
    GeneralizedCoordinates,
    GeneralizedForces,
    PartialResultants,
    ShapePoint,
    SweepRecord,
)
from ..beam_core.tools import precompute_partial_resultants, rigid_step, zero_resultants
from ..dense_linalg.tools import solve_small
from ..reissner_integrator import tools as reissner
from ..ziegler_integrator import tools as ziegler

logger = logging.getLogger(__name__)


def formulation_for(model: BeamModel) -> BeamModel:
    """Kirchhoff and Euler run through the Reissner sweep with degenerate compliances."""
    return BeamModel.ZIEGLER if BeamModel(model) == BeamModel.ZIEGLER else BeamModel.REISSNER


def run_sweep(model: BeamModel, f_a: GeneralizedForces, r_a: GeneralizedCoordinates, beam: BeamElement,
              resultants: PartialResultants) -> SweepRecord:
    if formulation_for(model) == BeamModel.ZIEGLER:
        return ziegler.sweep(f_a, r_a, beam, resultants)
    return reissner.sweep(f_a, r_a, beam, resultants)


def run_linearized(model: BeamModel, record: SweepRecord, beam: BeamElement, resultants: PartialResultants,
                   seeds=None) -> np.ndarray:
    if formulation_for(model) == BeamModel.ZIEGLER:
        return ziegler.sweep_linearized(record, record.f_a, record.r_a, beam, resultants, seeds)
    return reissner.sweep_linearized(record, record.f_a, record.r_a, beam, resultants, seeds)


def scaled_resultants(beam: BeamElement, load: Optional[DistributedLoad]) -> PartialResultants:
    if load is None:
        return zero_resultants(beam)
    return precompute_partial_resultants(load, beam).scaled(load.scale)


def weighted_norm(diff: np.ndarray, length: float) -> float:
    """sqrt((Δx/L)² + (Δz/L)² + Δφ²)."""
    return math.sqrt((diff[0] / length) ** 2 + (diff[1] / length) ** 2 + diff[2] ** 2)


class ShootingResult(NamedTuple):
    f: np.ndarray
    record: SweepRecord
    tangent: np.ndarray
    residuals: List[float]


def _trial_sweep(model: BeamModel, f: np.ndarray, r_a: GeneralizedCoordinates, beam: BeamElement,
                 resultants: PartialResultants) -> Optional[SweepRecord]:
    """Sweep for a trial f_a; None when the sweep itself breaks down."""
    try:
        return run_sweep(model, GeneralizedForces.from_array(f), r_a, beam, resultants)
    except (BeamInputError, ContractViolationError):
        raise
    except (ArithmeticError, NumericalConvergenceError, ValueError) as e:
        logger.debug(f"Trial sweep failed for f_a={f}: {e}")
        return None


def _line_search(model: BeamModel, f: np.ndarray, step: np.ndarray, residual: float, target: np.ndarray,
                 r_a: GeneralizedCoordinates, beam: BeamElement, resultants: PartialResultants,
                 residuals: List[float]) -> Tuple[np.ndarray, SweepRecord]:
    fraction = 1.0
    for _ in range(SHOOTING_BACKTRACKS + 1):
        trial = f + fraction * step
        record = _trial_sweep(model, trial, r_a, beam, resultants)
        if record is not None:
            trial_residual = weighted_norm(target - record.r_b.as_array(), beam.length)
            if trial_residual <= (1.0 - SHOOTING_SUFFICIENT_DECREASE * fraction) * residual:
                if fraction < 1.0:
                    logger.debug(f"Shooting step damped to {fraction:g}: residual {trial_residual:.3e}")
                return trial, record
        fraction *= 0.5
    raise ShootingConvergenceError(
        f"Shooting line search found no decrease below residual {residual:.3e}",
        last_iterate=GeneralizedForces.from_array(f),
        residuals=residuals,
    )


def _shoot(model: BeamModel, f: np.ndarray, target: np.ndarray, r_a: GeneralizedCoordinates, beam: BeamElement,
           resultants: PartialResultants, tol: float, max_iter: int, element_id: Optional[int]) -> ShootingResult:
    """Damped Newton iteration on f_a until the weighted end mismatch is below tol."""
    record = _trial_sweep(model, f, r_a, beam, resultants)
    if record is None:
        raise ShootingConvergenceError(f"Sweep failed for the initial guess {f}", last_iterate=None)

    residuals: List[float] = []
    for iteration in range(max_iter + 1):
        diff = target - record.r_b.as_array()
        residual = weighted_norm(diff, beam.length)
        residuals.append(residual)
        if not math.isfinite(residual):
            raise ShootingConvergenceError(f"Non-finite shooting residual at iteration {iteration}",
                                           last_iterate=record.f_a, residuals=residuals)
        if iteration > 0 and residuals[-2] > 0.0:
            logger.debug(
                f"Element {element_id} shooting iteration {iteration}: residual {residual:.3e}, "
                f"ratio {residual / residuals[-2] ** 2:.3e}"
            )
        tangent = run_linearized(model, record, beam, resultants)
        if residual <= tol:
            return ShootingResult(f, record, tangent, residuals)
        if iteration == max_iter:
            break
        jacobi = tangent[:3, :3].T
        if not np.all(np.isfinite(jacobi)):
            raise ShootingConvergenceError(f"Non-finite element Jacobi matrix at iteration {iteration}",
                                           last_iterate=record.f_a, residuals=residuals)
        try:
            step = solve_small(jacobi, diff)
        except SingularMatrixError as e:
            raise ElementBifurcationError(
                f"Singular element Jacobi matrix at iteration {iteration}: {e}", element_id=element_id
            ) from e
        f, record = _line_search(model, f, step, residual, target, r_a, beam, resultants, residuals)

    raise ShootingConvergenceError(
        f"Shooting did not converge in {max_iter} iterations (residual {residuals[-1]:.3e})",
        last_iterate=record.f_a,
        residuals=residuals,
    )


def _shoot_by_continuation(model: BeamModel, f_start: np.ndarray, target: np.ndarray, r_a: GeneralizedCoordinates,
                           beam: BeamElement, resultants: PartialResultants, tol: float, max_iter: int,
                           element_id: Optional[int]) -> Optional[ShootingResult]:
    """Move the target in equal substeps from where f_start lands; None if every level fails."""
    record = _trial_sweep(model, f_start, r_a, beam, resultants)
    if record is None:
        f_start = np.zeros(3)
        record = _trial_sweep(model, f_start, r_a, beam, resultants)
        if record is None:
            return None
    start = record.r_b.as_array()
    for substeps in SHOOTING_CONTINUATION_LEVELS:
        f = f_start
        try:
            for k in range(1, substeps + 1):
                goal = start + (target - start) * (k / substeps)
                result = _shoot(model, f, goal, r_a, beam, resultants, tol, max_iter, element_id)
                f = result.f
            logger.info(f"Element {element_id} shooting converged with {substeps} target substeps")
            return result
        except (ShootingConvergenceError, ElementBifurcationError) as e:
            logger.debug(f"Element {element_id} continuation with {substeps} substeps failed: {e}")
    return None


def end_forces(
    r_a: GeneralizedCoordinates,
    r_b: GeneralizedCoordinates,
    beam: BeamElement,
    load: Optional[DistributedLoad] = None,
    model: BeamModel = BeamModel.REISSNER,
    f_a_guess: Optional[GeneralizedForces] = None,
    tol: float = SHOOTING_TOL,
    max_iter: int = SHOOTING_MAX_ITER,
    resultants: Optional[PartialResultants] = None,
    element_id: Optional[int] = None,
) -> ElementState:
    """Shooting: find f_a such that the sweep from r_a lands on r_b.

    `resultants`, when given, must already carry the load factor and take
    precedence over `load`. When Newton fails from the guess the target is
    approached in substeps; if that fails too the first error is raised.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if resultants is None:
        resultants = scaled_resultants(beam, load)
    f = np.zeros(3) if f_a_guess is None else f_a_guess.as_array()
    if not np.all(np.isfinite(f)):
        raise ValueError(f"initial guess must be finite, got {f}")
    target = r_b.as_array()

    try:
        result = _shoot(model, f, target, r_a, beam, resultants, tol, max_iter, element_id)
    except ShootingConvergenceError as e:
        logger.info(f"Element {element_id} shooting failed from the guess ({e}), continuing on the target")
        result = _shoot_by_continuation(model, f, target, r_a, beam, resultants, tol, max_iter, element_id)
        if result is None:
            logger.warning(f"Element {element_id} shooting did not converge: residuals {e.residuals}")
            raise

    record, tangent = result.record, result.tangent
    f_a = GeneralizedForces.from_array(result.f)
    f_b = GeneralizedForces(
        fx=-f_a.fx - resultants.px_end,
        fz=-f_a.fz - resultants.pz_end,
        m=-f_a.m + f_a.fx * (record.r_b.z - r_a.z) - f_a.fz * (record.r_b.x - r_a.x) + record.mp_end,
    )
    return ElementState(
        model=BeamModel(model),
        f_a=f_a,
        f_b=f_b,
        r_a=r_a,
        r_b=record.r_b,
        record=record,
        jacobi=tangent[:3, :3].T.copy(),
        phi_a_column=tangent[3, :3].copy(),
        mp_sensitivities=tangent[:, 3].copy(),
        iterations=len(result.residuals) - 1,
        residual=result.residuals[-1],
        has_member_load=resultants.has_load,
        element_id=element_id,
    )


def invert_jacobi(state: ElementState) -> np.ndarray:
    try:
        return np.column_stack([solve_small(state.jacobi, e) for e in np.eye(3)])
    except SingularMatrixError as e:
        raise ElementBifurcationError(f"Singular element Jacobi matrix: {e}", element_id=state.element_id) from e


def tangent_stiffness(state: ElementState, has_member_load: Optional[bool] = None) -> ElementTangent:
    """6x6 map from (dr_a, dr_b) to (df_a, df_b) at a converged state."""
    if has_member_load is None:
        has_member_load = state.has_member_load
    g_inv = invert_jacobi(state)
    X, Z = state.f_a.fx, state.f_a.fz
    xa, za = state.r_a.x, state.r_a.z
    xb, zb = state.r_b.x, state.r_b.z

    k = np.zeros((6, 6))
    k[:3, 3:] = g_inv
    k[:3, 0] = -g_inv[:, 0]
    k[:3, 1] = -g_inv[:, 1]
    if has_member_load:
        k[:3, 2] = -g_inv @ state.phi_a_column
    else:
        k[:3, 2] = g_inv @ np.array([za - zb, xb - xa, -1.0]) + np.array([Z, -X, 0.0])
    k[3] = -k[0]
    k[4] = -k[1]
    row = np.array([Z, -X, 0.0, -Z, X, 0.0]) + k[0] * (zb - za) + k[1] * (xa - xb) - k[2]
    if has_member_load:
        mp = state.mp_sensitivities
        row = row + mp[0] * k[0] + mp[1] * k[1] + mp[2] * k[2]
        row[2] += mp[3]
    k[5] = row
    return ElementTangent(k=k)


def advance_rigid(
    point: Tuple[float, float, float, float],
    offset_length: float,
    px: float = 0.0,
    pz: float = 0.0,
    m: float = 0.0,
) -> Tuple[float, float, float, float]:
    """Cross a rigid offset from (x, z, φ, M_p); px, pz are partial resultants and m the
    moment density at the middle of the offset."""
    if offset_length < 0.0:
        raise ValueError(f"offset_length must be >= 0, got {offset_length}")
    if offset_length == 0.0:
        return point
    x, z, phi, mp = point
    return rigid_step(x, z, phi, mp, ArmLoad(length=offset_length, px=px, pz=pz, m=m))


def deformed_shape(record: SweepRecord, beam: BeamElement) -> List[ShapePoint]:
    """Midpoint values along the flexible part of a sweep."""
    xi = beam.midpoints()
    coords = 0.5 * (record.coords[:-1] + record.coords[1:])
    moment = 0.5 * (record.moment[:-1] + record.moment[1:])
    return [
        ShapePoint(
            xi=float(xi[k]),
            x=float(coords[k, 0]),
            z=float(coords[k, 1]),
            phi=float(record.phi_mid[k]),
            axial=float(record.axial[k]),
            shear=float(record.shear[k]),
            moment=float(moment[k]),
        )
        for k in range(record.segments)
    ]
