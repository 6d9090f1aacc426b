import logging
import math
from typing import Optional

import numpy as np

from ...models import (
    BeamElement,
    BeamModel,
    GeneralizedCoordinates,
    GeneralizedForces,
    PartialResultants,
    SweepRecord,
)
from ..beam_core.tools import check_record, check_resultants, rigid_step, zero_resultants

logger = logging.getLogger(__name__)


def sweep(
    f_a: GeneralizedForces,
    r_a: GeneralizedCoordinates,
    beam: BeamElement,
    resultants: Optional[PartialResultants] = None,
) -> SweepRecord:
    """Explicit staggered-grid integration of the Reissner beam from end a to end b.

    `resultants` must already carry the load factor. Rigid end arms are
    crossed with `rigid_step` and carry φ unchanged.
    """
    if resultants is None:
        resultants = zero_resultants(beam)
    check_resultants(beam, resultants)

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

    for k in range(n):
        phih = phi + M * cb[k] * half
        c = math.cos(phih)
        s = math.sin(phih)
        p1 = X + px[k]
        p2 = Z + pz[k]
        nf = -c * p1 + s * p2
        q = -s * p1 - c * p2
        eps = nf * ca[k]
        gam = q * cs[k]
        dx = (c * (1.0 + eps) + s * gam) * dxi
        dz = (c * gam - s * (1.0 + eps)) * dxi
        x += dx
        z += dz
        mp += -m[k] * dxi + px[k] * dz - pz[k] * dx
        M = -Mab + X * (z - za) - Z * (x - xa) + mp
        phi = phih + M * cb[k] * half

        phi_mid[k] = phih
        cos_mid[k] = c
        sin_mid[k] = s
        axial[k] = nf
        shear[k] = q
        strain[k] = eps
        shear_strain[k] = gam
        coords[k + 1] = (x, z)
        phi_grid[k + 1] = phi
        moment[k + 1] = M
        load_moment[k + 1] = mp

    if resultants.right_arm is not None:
        x, z, phi, mp = rigid_step(x, z, phi, mp, resultants.right_arm)

    return SweepRecord(
        formulation=BeamModel.REISSNER,
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
    """Tangent of the sweep for a batch of seeds over (dX_ab, dZ_ab, dM_ab, dφ_a).

    Returns an array of shape (len(seeds), 4) with rows (dx_N, dz_N, dφ_N, dM_pN).
    The default seeds are the four unit vectors.
    """
    if resultants is None:
        resultants = zero_resultants(beam)
    check_record(record, BeamModel.REISSNER, f_a, r_a, beam)
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
        nf, q = record.axial[k], record.shear[k]
        stretch = 1.0 + record.strain[k]
        gam = record.shear_strain[k]

        dphih = dphi + dM * (cb[k] * half)
        dN = -c * dX + s * dZ - q * dphih
        dQ = -s * dX - c * dZ + nf * dphih
        deps = dN * ca[k]
        dgam = dQ * cs[k]
        ddx = (c * deps + s * dgam + (c * gam - s * stretch) * dphih) * dxi
        ddz = (c * dgam - s * deps - (s * gam + c * stretch) * dphih) * dxi
        dx = dx + ddx
        dz = dz + ddz
        dmp = dmp + px[k] * ddz - pz[k] * ddx
        xi, zi = record.coords[k + 1]
        dM = -dMab + dX * (zi - za) + X * dz - dZ * (xi - xa) - Z * dx + dmp
        dphi = dphih + dM * (cb[k] * half)

    dx, dz, dmp = end_tangent(record.phi_end, dphi, dx, dz, dmp, resultants)
    return np.column_stack([dx, dz, dphi, dmp])


def start_tangent(phi_a: float, dphi: np.ndarray, resultants: PartialResultants):
    """Increments (dx, dz, dM_p) at the first flexible station caused by dφ_a on a left arm."""
    zeros = np.zeros_like(dphi)
    arm = resultants.left_arm
    if arm is None:
        return zeros, zeros.copy(), zeros.copy()
    dx = -arm.length * math.sin(phi_a) * dphi
    dz = -arm.length * math.cos(phi_a) * dphi
    return dx, dz, arm.px * dz - arm.pz * dx


def end_tangent(phi_n: float, dphi: np.ndarray, dx: np.ndarray, dz: np.ndarray, dmp: np.ndarray,
                resultants: PartialResultants):
    arm = resultants.right_arm
    if arm is None:
        return dx, dz, dmp
    ddx = -arm.length * math.sin(phi_n) * dphi
    ddz = -arm.length * math.cos(phi_n) * dphi
    return dx + ddx, dz + ddz, dmp + arm.px * ddz - arm.pz * ddx
