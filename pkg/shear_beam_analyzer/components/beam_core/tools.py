import logging
import math
from typing import Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ...exceptions import BeamInputError, ContractViolationError
from ...models import (
    ArmLoad,
    BeamElement,
    BeamModel,
    DistributedLoad,
    GeneralizedCoordinates,
    GeneralizedForces,
    LoadDensity,
    PartialResultants,
    SectionCompliances,
    SweepRecord,
)

logger = logging.getLogger(__name__)


def sample_density(density: LoadDensity, stations: np.ndarray, name: str = "density") -> np.ndarray:
    """Evaluate a constant, tabulated or callable load density at the given stations."""
    try:
        if isinstance(density, (int, float)):
            values = np.full(stations.shape, float(density))
        elif callable(density):
            values = np.array([float(density(float(xi))) for xi in stations])
        else:
            table = np.asarray(density, dtype=float)
            if table.ndim != 2 or table.shape[1] != 2 or len(table) < 1:
                raise BeamInputError(f"{name}: table must be a list of (xi, value) pairs")
            order = np.argsort(table[:, 0])
            xs, ys = table[order, 0], table[order, 1]
            if stations.min() < xs[0] - 1e-12 or stations.max() > xs[-1] + 1e-12:
                raise BeamInputError(f"{name}: table covers [{xs[0]}, {xs[-1]}], stations need [{stations.min()}, {stations.max()}]")
            values = np.interp(stations, xs, ys)
    except BeamInputError:
        raise
    except Exception as e:
        raise BeamInputError(f"{name}: sampling failed: {e}") from e
    if not np.all(np.isfinite(values)):
        raise BeamInputError(f"{name}: non-finite sample")
    return values


def resultant_stations(beam: BeamElement) -> Tuple[np.ndarray, slice, int, int]:
    """Stations for the load integrals.

    Returns the station array, the slice of flexible midpoints within it and the
    indices of the left and right arm midpoints (-1 when an arm is absent).
    """
    d_left, d_right = beam.rigid_offset_left, beam.rigid_offset_right
    parts = [np.array([0.0])]
    left = -1
    if d_left > 0.0:
        parts.append(np.array([0.5 * d_left]))
        left = 1
    start = sum(len(p) for p in parts)
    parts.append(beam.midpoints())
    right = -1
    if d_right > 0.0:
        parts.append(np.array([beam.length - 0.5 * d_right]))
        right = start + beam.segments
    parts.append(np.array([beam.length]))
    return np.concatenate(parts), slice(start, start + beam.segments), left, right


def precompute_partial_resultants(load: DistributedLoad, beam: BeamElement) -> PartialResultants:
    """Trapezoidal partial resultants P_x, P_z of the reference load.

    The load factor `load.scale` is not applied here; use `PartialResultants.scaled`.
    """
    n = beam.segments
    if load is None or load.is_zero:
        zeros = np.zeros(n)
        left = ArmLoad(length=beam.rigid_offset_left) if beam.rigid_offset_left > 0.0 else None
        right = ArmLoad(length=beam.rigid_offset_right) if beam.rigid_offset_right > 0.0 else None
        return PartialResultants(px_half=zeros, pz_half=zeros.copy(), m_half=zeros.copy(), left_arm=left, right_arm=right)

    stations, mid, left, right = resultant_stations(beam)
    px = cumulative_trapezoid(sample_density(load.px, stations, "px"), stations, initial=0.0)
    pz = cumulative_trapezoid(sample_density(load.pz, stations, "pz"), stations, initial=0.0)
    m = sample_density(load.m, stations, "m")

    for force in load.point_forces:
        if not 0.0 <= force.position <= beam.length:
            raise BeamInputError(f"concentrated force at {force.position} outside [0, {beam.length}]")
        past = stations > force.position
        px[past] += force.fx
        pz[past] += force.fz

    def arm(index: int, length: float):
        if index < 0:
            return None
        return ArmLoad(length=length, px=float(px[index]), pz=float(pz[index]), m=float(m[index]))

    resultants = PartialResultants(
        px_half=px[mid].copy(),
        pz_half=pz[mid].copy(),
        m_half=m[mid].copy(),
        px_end=float(px[-1]),
        pz_end=float(pz[-1]),
        left_arm=arm(left, beam.rigid_offset_left),
        right_arm=arm(right, beam.rigid_offset_right),
        has_load=bool(np.any(px != 0.0) or np.any(pz != 0.0) or np.any(m != 0.0)),
    )
    logger.debug(f"Partial resultants on {len(stations)} stations: P(L) = ({resultants.px_end}, {resultants.pz_end})")
    return resultants


def compliances_at(beam: BeamElement, segment_index: int) -> SectionCompliances:
    """Compliance record of segment i, 1 <= i <= N."""
    if not 1 <= segment_index <= beam.segments:
        raise BeamInputError(f"segment index {segment_index} outside 1..{beam.segments}")
    if isinstance(beam.compliances, list):
        return beam.compliances[segment_index - 1]
    return beam.compliances


def rigid_step(x: float, z: float, phi: float, mp: float, arm: ArmLoad) -> Tuple[float, float, float, float]:
    """Advance (x, z, φ, M_p) across a rigid arm using arm-midpoint load values."""
    dx = arm.length * math.cos(phi)
    dz = -arm.length * math.sin(phi)
    mp = mp + arm.px * dz - arm.pz * dx - arm.m * arm.length
    return x + dx, z + dz, phi, mp


def zero_resultants(beam: BeamElement) -> PartialResultants:
    return precompute_partial_resultants(None, beam)


def check_resultants(beam: BeamElement, resultants: PartialResultants) -> None:
    if len(resultants.px_half) != beam.segments:
        raise ContractViolationError(
            f"resultants hold {len(resultants.px_half)} midpoints, beam has {beam.segments} segments"
        )
    if (resultants.left_arm is not None) != (beam.rigid_offset_left > 0.0) or (
        resultants.right_arm is not None
    ) != (beam.rigid_offset_right > 0.0):
        raise ContractViolationError("resultants were computed for different rigid offsets")


def check_record(record: SweepRecord, formulation: BeamModel, f_a: GeneralizedForces,
                 r_a: GeneralizedCoordinates, beam: BeamElement) -> None:
    """A linearized sweep must run on the record of the same base sweep."""
    if record.formulation != formulation:
        raise ContractViolationError(f"record is a {record.formulation.value} sweep, expected {formulation.value}")
    if record.f_a != f_a or record.r_a != r_a:
        raise ContractViolationError("record was computed for different end forces or coordinates")
    if record.segments != beam.segments or record.segment_length != beam.segment_length:
        raise ContractViolationError("record was computed on a different grid")
