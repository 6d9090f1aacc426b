import logging
import math
from typing import Optional

import numpy as np
from scipy.optimize import bisect

from ...config import (
    PIVOT_THRESHOLD,
    SHEAR_ANGLE_BRACKET_MARGIN,
    SHEAR_ANGLE_MAX_ITER,
    SHEAR_ANGLE_TOL_FACTOR,
)
from ...exceptions import ShearAngleConvergenceError, SingularLinearizationError
from ...models import (
    BeamElement,
    BeamModel,
    GeneralizedCoordinates,
    GeneralizedForces,
    PartialResultants,
    SectionCompliances,
    SweepRecord,
)
from ..beam_core.tools import check_record, check_resultants, rigid_step, zero_resultants
from ..reissner_integrator.tools import end_tangent, start_tangent

logger = logging.getLogger(__name__)


def shear_angle_residual(chi: float, phi_mid: float, p1: float, p2: float, c_axial: float, gas: float):
    """F(χ) = GA_s·χ − λ·Q* and its derivative."""
    psi = phi_mid - chi
    c = math.cos(psi)
    s = math.sin(psi)
    n_tilde = -c * p1 + s * p2
    q_star = -s * p1 - c * p2
    lam = 1.0 + n_tilde * c_axial
    return gas * chi - lam * q_star, gas + lam * n_tilde - q_star * q_star * c_axial


def solve_shear_angle(
    phi_mid: float,
    p1: float,
    p2: float,
    compliances: SectionCompliances,
    chi_guess: float = 0.0,
    tol: Optional[float] = None,
) -> float:
    """Root χ ∈ (−π/2, π/2) of the Ziegler shear condition at one midpoint.

    Newton from `chi_guess`; bisection on the open interval if Newton stalls or
    leaves it. c_shear = 0 returns 0 without iterating.
    """
    if compliances.c_shear == 0.0:
        return 0.0
    gas = 1.0 / compliances.c_shear
    if tol is None:
        tol = SHEAR_ANGLE_TOL_FACTOR * max(abs(p1), abs(p2), gas)
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    return iterate_shear_angle(phi_mid, p1, p2, compliances.c_axial, gas, chi_guess, tol)


def iterate_shear_angle(phi_mid: float, p1: float, p2: float, ca: float, gas: float, chi: float, tol: float) -> float:
    limit = 0.5 * math.pi
    residuals = []
    for _ in range(SHEAR_ANGLE_MAX_ITER):
        f, df = shear_angle_residual(chi, phi_mid, p1, p2, ca, gas)
        residuals.append(abs(f))
        if df == 0.0:
            break
        step = f / df
        chi_next = chi - step
        if not -limit < chi_next < limit:
            break
        chi = chi_next
        if abs(f) < tol:
            return chi

    logger.warning(f"Shear-angle Newton stalled at chi={chi} (|F|={residuals[-1] if residuals else float('nan')}), bisecting")
    margin = SHEAR_ANGLE_BRACKET_MARGIN
    lo, hi = -limit + margin, limit - margin

    def f_only(value: float) -> float:
        return shear_angle_residual(value, phi_mid, p1, p2, ca, gas)[0]

    if f_only(lo) * f_only(hi) > 0.0:
        raise ShearAngleConvergenceError(
            f"Shear angle has no bracketed root for phi={phi_mid}, p=({p1}, {p2})",
            last_iterate=chi,
            residuals=residuals,
        )
    root = bisect(f_only, lo, hi, xtol=1e-15, maxiter=200)
    if abs(f_only(root)) >= max(tol, 1e-9 * gas * abs(root)):
        raise ShearAngleConvergenceError(
            f"Shear angle bisection ended at |F|={abs(f_only(root))} > tol={tol}",
            last_iterate=root,
            residuals=residuals,
        )
    return root


def default_tolerance(f_a: GeneralizedForces, beam: BeamElement, resultants: PartialResultants) -> float:
    _, cs, _ = beam.compliance_arrays()
    flexible = cs[cs > 0.0]
    gas_max = float((1.0 / flexible).max()) if len(flexible) else 0.0
    scale = max(abs(f_a.fx) + abs(resultants.px_end), abs(f_a.fz) + abs(resultants.pz_end), gas_max)
    return SHEAR_ANGLE_TOL_FACTOR * scale if scale > 0.0 else SHEAR_ANGLE_TOL_FACTOR


def sweep(
    f_a: GeneralizedForces,
    r_a: GeneralizedCoordinates,
    beam: BeamElement,
    resultants: Optional[PartialResultants] = None,
    tol: Optional[float] = None,
) -> SweepRecord:
    """Ziegler sweep: per midpoint, solve for χ, then step along the centerline angle φ − χ."""
    if resultants is None:
        resultants = zero_resultants(beam)
    check_resultants(beam, resultants)
    if tol is None:
        tol = default_tolerance(f_a, beam, resultants)

    n = beam.segments
    dxi = beam.segment_length
    half = 0.5 * dxi
    ca, cs, cb = (a.tolist() for a in beam.compliance_arrays())
    px, pz, m = resultants.px_half.tolist(), resultants.pz_half.tolist(), resultants.m_half.tolist()
    X, Z, Mab = f_a.fx, f_a.fz, f_a.m
    xa, za = r_a.x, r_a.z

    x, z, phi, mp = xa, za, r_a.phi, 0.0
    if resultants.left_arm is not None:
        x, z, phi, mp = rigid_step(x, z, phi, mp, resultants.left_arm)

    coords = np.empty((n + 1, 2))
    phi_grid = np.empty(n + 1)
    moment = np.empty(n + 1)
    load_moment = np.empty(n + 1)
    phi_mid = np.empty(n)
    axial = np.empty(n)
    shear = np.empty(n)
    strain = np.empty(n)
    shear_strain = np.empty(n)
    cos_mid = np.empty(n)
    sin_mid = np.empty(n)

    M = -Mab + X * (z - za) - Z * (x - xa) + mp
    coords[0] = (x, z)
    phi_grid[0] = phi
    moment[0] = M
    load_moment[0] = mp

    chi = 0.0
    for k in range(n):
        phih = phi + M * cb[k] * half
        p1 = X + px[k]
        p2 = Z + pz[k]
        if cs[k] > 0.0:
            try:
                chi = iterate_shear_angle(phih, p1, p2, ca[k], 1.0 / cs[k], chi, tol)
            except ShearAngleConvergenceError as e:
                logger.error(f"Shear angle failed at midpoint {k + 1} of {n}: {e}")
                raise
        else:
            chi = 0.0
        psi = phih - chi
        c = math.cos(psi)
        s = math.sin(psi)
        nt = -c * p1 + s * p2
        qs = -s * p1 - c * p2
        eps_s = nt * ca[k]
        lam = 1.0 + eps_s
        dx = (c * lam) * dxi
        dz = -(s * lam) * dxi
        x += dx
        z += dz
        mp += -m[k] * dxi + px[k] * dz - pz[k] * dx
        M = -Mab + X * (z - za) - Z * (x - xa) + mp
        phi = phih + M * cb[k] * half

        phi_mid[k] = phih
        cos_mid[k] = c
        sin_mid[k] = s
        axial[k] = nt
        shear[k] = qs
        strain[k] = eps_s
        shear_strain[k] = chi
        coords[k + 1] = (x, z)
        phi_grid[k + 1] = phi
        moment[k + 1] = M
        load_moment[k + 1] = mp

    if resultants.right_arm is not None:
        x, z, phi, mp = rigid_step(x, z, phi, mp, resultants.right_arm)

    return SweepRecord(
        formulation=BeamModel.ZIEGLER,
        f_a=f_a,
        r_a=r_a,
        segment_length=dxi,
        coords=coords,
        phi_grid=phi_grid,
        phi_mid=phi_mid,
        moment=moment,
        load_moment=load_moment,
        axial=axial,
        shear=shear,
        strain=strain,
        shear_strain=shear_strain,
        cos_mid=cos_mid,
        sin_mid=sin_mid,
        r_b=GeneralizedCoordinates(x=x, z=z, phi=phi),
        mp_end=mp,
    )


def sweep_linearized(
    record: SweepRecord,
    f_a: GeneralizedForces,
    r_a: GeneralizedCoordinates,
    beam: BeamElement,
    resultants: Optional[PartialResultants] = None,
    seeds=None,
) -> np.ndarray:
    """Tangent of the Ziegler sweep; χ enters through the implicit-function derivative of F = 0."""
    if resultants is None:
        resultants = zero_resultants(beam)
    check_record(record, BeamModel.ZIEGLER, f_a, r_a, beam)
    check_resultants(beam, resultants)
    seeds = np.eye(4) if seeds is None else np.atleast_2d(np.asarray(seeds, dtype=float))

    dxi = beam.segment_length
    half = 0.5 * dxi
    ca, cs, cb = beam.compliance_arrays()
    px, pz = resultants.px_half, resultants.pz_half
    X, Z = f_a.fx, f_a.fz
    xa, za = r_a.x, r_a.z
    dX, dZ, dMab, dphi = (seeds[:, j].copy() for j in range(4))

    dx, dz, dmp = start_tangent(r_a.phi, dphi, resultants)
    x0, z0 = record.coords[0]
    dM = -dMab + dX * (z0 - za) + X * dz - dZ * (x0 - xa) - Z * dx + dmp

    for k in range(beam.segments):
        c, s = record.cos_mid[k], record.sin_mid[k]
        nt, qs = record.axial[k], record.shear[k]
        lam = 1.0 + record.strain[k]

        dphih = dphi + dM * (cb[k] * half)
        if cs[k] > 0.0:
            gas = 1.0 / cs[k]
            den = gas + lam * nt - qs * qs * ca[k]
            if abs(den) <= PIVOT_THRESHOLD * max(gas, abs(lam * nt), qs * qs * ca[k]):
                raise SingularLinearizationError(
                    f"Shear-angle derivative vanishes at midpoint {k + 1}: {den}", segment=k + 1, denominator=den
                )
            dchi = (
                (-c * qs * ca[k] - s * lam) * dX
                + (s * qs * ca[k] - c * lam) * dZ
                + (lam * nt - qs * qs * ca[k]) * dphih
            ) / den
        else:
            dchi = 0.0
        dpsi = dphih - dchi
        dnt = -c * dX + s * dZ - qs * dpsi
        dlam = dnt * ca[k]
        ddx = (c * dlam - s * lam * dpsi) * dxi
        ddz = (-s * dlam - c * lam * dpsi) * dxi
        dx = dx + ddx
        dz = dz + ddz
        dmp = dmp + px[k] * ddz - pz[k] * ddx
        xi, zi = record.coords[k + 1]
        dM = -dMab + dX * (zi - za) + X * dz - dZ * (xi - xa) - Z * dx + dmp
        dphi = dphih + dM * (cb[k] * half)

    dx, dz, dmp = end_tangent(record.phi_end, dphi, dx, dz, dmp, resultants)
    return np.column_stack([dx, dz, dphi, dmp])
