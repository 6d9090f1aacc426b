import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import fresnel as normalized_fresnel

from ...config import TENSION_ROOT_MARGIN
from ...exceptions import ContractViolationError, NoBifurcationError
from ...models import (
    CantileverMomentParams,
    CompressionModel,
    PostCriticalTension,
    StabilityParams,
    SupportType,
    TimoshenkoCase,
)

logger = logging.getLogger(__name__)

SQRT_HALF_PI = math.sqrt(0.5 * math.pi)
MODE_STRAIN_RTOL = 1e-8


def timoshenko_deflection(case: TimoshenkoCase, load: float, h_over_L: float) -> float:
    """Linear deflection w/L of the rectangular benchmark beams (Γ = 1/3).

    `load` is FL²/EI for the midspan force and fL³/EI for the clamped uniform load.
    """
    if not h_over_L > 0.0:
        raise ValueError(f"h_over_L must be positive, got {h_over_L}")
    case = TimoshenkoCase(case)
    if case == TimoshenkoCase.MIDSPAN_FORCE:
        return load * (1.0 + 3.0 * h_over_L ** 2) / 48.0
    return load * (1.0 + 12.0 * h_over_L ** 2) / 384.0


def fresnel(x: float) -> Tuple[float, float]:
    """C(x) = ∫₀ˣ cos s² ds and S(x) = ∫₀ˣ sin s² ds."""
    if x < 0.0:
        raise ValueError(f"x must be >= 0, got {x}")
    s, c = normalized_fresnel(x / SQRT_HALF_PI)
    return SQRT_HALF_PI * float(c), SQRT_HALF_PI * float(s)


def cantilever_moment_shape(params: CantileverMomentParams, xi_over_L: float) -> Tuple[float, float]:
    """Deformed position (x_s/L, z_s/L) of a cantilever under a uniform distributed moment.

    z_s is measured towards the side the beam curls to.
    """
    if not 0.0 <= xi_over_L <= 1.0:
        raise ValueError(f"xi_over_L must lie in [0, 1], got {xi_over_L}")
    t = params.mu * SQRT_HALF_PI
    if t < 1e-6:
        # small-load limit of the closed form
        return xi_over_L, 0.0
    u = t * (1.0 - xi_over_L)
    c_t, s_t = fresnel(t)
    c_u, s_u = fresnel(u)
    dc, ds = c_t - c_u, s_t - s_u
    cos_t2, sin_t2 = math.cos(t * t), math.sin(t * t)
    return (cos_t2 * dc + sin_t2 * ds) / t, (sin_t2 * dc - cos_t2 * ds) / t


def _beta(gamma: float) -> float:
    return (1.0 - gamma) / gamma


def critical_compression(model: CompressionModel, params: StabilityParams) -> Optional[float]:
    """Critical compressive strain P/EA of a straight member.

    Returns None for Ziegler when the slenderness is below the bifurcation limit.
    Kirchhoff raises NoBifurcationError when s² < 4π².
    """
    model = CompressionModel(model)
    euler = math.pi ** 2 / params.slenderness ** 2
    gamma = params.gamma

    if model == CompressionModel.EULER:
        return euler
    if model == CompressionModel.KIRCHHOFF:
        discriminant = 1.0 - 4.0 * euler
        if discriminant < 0.0:
            raise NoBifurcationError(f"Kirchhoff critical load has no real root for s={params.slenderness}")
        return 0.5 * (1.0 - math.sqrt(discriminant))
    if model == CompressionModel.REISSNER:
        return 2.0 * euler / (1.0 + math.sqrt(1.0 + 4.0 * _beta(gamma) * euler))
    if model == CompressionModel.ENGESSER:
        return euler / (1.0 + euler / gamma)

    s2 = params.slenderness ** 2
    if s2 < math.pi ** 2 * (4.0 - 1.0 / gamma):
        logger.info(f"No Ziegler bifurcation for gamma={gamma}, s={params.slenderness}")
        return None
    return 0.5 * (1.0 - math.sqrt(1.0 - 4.0 * math.pi ** 2 * gamma / (gamma * s2 + math.pi ** 2)))


def compression_residual(model: CompressionModel, strain: float, params: StabilityParams) -> float:
    """Residual of the critical condition that defines critical_compression."""
    model = CompressionModel(model)
    euler = math.pi ** 2 / params.slenderness ** 2
    gamma = params.gamma
    if model == CompressionModel.EULER:
        return strain - euler
    if model == CompressionModel.KIRCHHOFF:
        return strain * (1.0 - strain) - euler
    if model == CompressionModel.REISSNER:
        return _beta(gamma) * strain ** 2 + strain - euler
    if model == CompressionModel.ENGESSER:
        return strain * (1.0 + euler / gamma) - euler
    return strain * (1.0 - strain) - math.pi ** 2 * gamma / (gamma * params.slenderness ** 2 + math.pi ** 2)


def _one_clamped_tension(gamma: float, slenderness: float) -> float:
    beta = _beta(gamma)
    return 0.5 / beta * (1.0 + math.sqrt(1.0 + 4.0 * beta * math.pi ** 2 / slenderness ** 2))


def clamped_both_tension_residual(strain: float, params: StabilityParams) -> float:
    """Critical condition of the member clamped at both ends, defined for ε > 1/β'."""
    beta = _beta(params.gamma)
    s = params.slenderness
    kappa = s * math.sqrt((beta * strain - 1.0) * strain)
    return math.sqrt(beta - 1.0 / strain) * math.tan(kappa) + s * (1.0 + strain)


def _clamped_both_tension(params: StabilityParams) -> float:
    beta = _beta(params.gamma)
    s = params.slenderness
    # the tangent passes π/2 here and the residual jumps from +inf to -inf
    singular = 0.5 / beta * (1.0 + math.sqrt(1.0 + beta * math.pi ** 2 / s ** 2))
    upper = _one_clamped_tension(params.gamma, s)
    lower = singular * (1.0 + TENSION_ROOT_MARGIN)

    def residual(strain: float) -> float:
        return clamped_both_tension_residual(strain, params)

    if residual(lower) > 0.0 or residual(upper) < 0.0:
        raise NoBifurcationError(
            f"Clamped-both tensile condition not bracketed in ({lower}, {upper}) for gamma={params.gamma}, s={s}"
        )
    return brentq(residual, lower, upper, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=200)


def critical_tension_reissner(params: StabilityParams) -> float:
    """Critical tensile strain P/EA of the Reissner member for the given support."""
    gamma = params.gamma
    if gamma >= 1.0:
        raise NoBifurcationError(f"No tensile bifurcation for gamma={gamma} >= 1")
    support = SupportType(params.support)
    if support == SupportType.SIMPLY_SUPPORTED:
        return gamma / (1.0 - gamma)
    if support == SupportType.CLAMPED_ONE_END:
        return _one_clamped_tension(gamma, params.slenderness)
    return _clamped_both_tension(params)


def tension_residual(strain: float, params: StabilityParams) -> float:
    support = SupportType(params.support)
    beta = _beta(params.gamma)
    if support == SupportType.SIMPLY_SUPPORTED:
        return beta * strain - 1.0
    if support == SupportType.CLAMPED_ONE_END:
        return beta * strain ** 2 - strain - math.pi ** 2 / params.slenderness ** 2
    return clamped_both_tension_residual(strain, params)


def critical_force_compression(model: CompressionModel, params: StabilityParams, ea: float) -> Optional[float]:
    strain = critical_compression(model, params)
    return None if strain is None else strain * ea


def critical_force_tension(params: StabilityParams, ea: float) -> float:
    return critical_tension_reissner(params) * ea


def tensile_buckling_mode(
    params: StabilityParams,
    xi_over_L: float,
    strain: Optional[float] = None,
) -> Tuple[float, float]:
    """Tensile buckling mode (δφ, δz_s/L) with unit rotation amplitude.

    ξ is measured from the clamped end for the one-clamped member. When `strain` is
    given it must be the critical strain of `params`.
    """
    if not 0.0 <= xi_over_L <= 1.0:
        raise ValueError(f"xi_over_L must lie in [0, 1], got {xi_over_L}")
    critical = critical_tension_reissner(params)
    if strain is not None and abs(strain - critical) > MODE_STRAIN_RTOL * critical:
        raise ContractViolationError(f"Mode requested at strain {strain}, critical strain is {critical}")
    beta = _beta(params.gamma)
    s = params.slenderness
    support = SupportType(params.support)

    if support == SupportType.SIMPLY_SUPPORTED:
        return 1.0, 0.0
    if support == SupportType.CLAMPED_ONE_END:
        angle = 0.5 * math.pi * xi_over_L
        amplitude = (math.sqrt(1.0 + 4.0 * beta * math.pi ** 2 / s ** 2) - 1.0) / math.pi
        return math.sin(angle), amplitude * (1.0 - math.cos(angle))

    kappa = s * math.sqrt((beta * critical - 1.0) * critical)
    t = 2.0 * xi_over_L - 1.0
    denominator = 1.0 - math.cos(kappa)
    rotation = (math.cos(kappa * t) - math.cos(kappa)) / denominator
    deflection = (
        kappa / (2.0 * s ** 2 * critical) * (math.sin(kappa) + math.sin(kappa * t))
        + (1.0 + critical) * math.cos(kappa) * 0.5 * (1.0 + t)
    ) / denominator
    return rotation, deflection


def tensile_mode_shear_ratio(params: StabilityParams) -> float:
    """Shear angle amplitude over the centerline deviation angle, one-clamped mode."""
    one_clamped = params.model_copy(update={"support": SupportType.CLAMPED_ONE_END})
    critical = critical_tension_reissner(one_clamped)
    beta = _beta(params.gamma)
    # δz'/(1+ε) at the free end, per unit δφ
    slope = 0.5 * (math.sqrt(1.0 + 4.0 * beta * math.pi ** 2 / params.slenderness ** 2) - 1.0) / (1.0 + critical)
    return (1.0 + slope) / slope


def postcritical_tension_ss(phi: float, gamma: float) -> PostCriticalTension:
    """Post-critical branch of the simply supported bar in tension."""
    if not abs(phi) < 0.5 * math.pi:
        raise ValueError(f"|phi| must be below pi/2, got {phi}")
    if not 0.0 < gamma < 1.0:
        raise NoBifurcationError(f"No tensile bifurcation for gamma={gamma}")
    force = gamma / ((1.0 - gamma) * math.cos(phi))
    axial = force * math.cos(phi)
    shear = force * math.sin(phi) / gamma
    return PostCriticalTension(
        force_ratio=force,
        length_ratio=math.hypot(1.0 + axial, shear),
        elongation_check=force / gamma,
    )


def critical_loads_row(h_over_L: float, gamma: float = 1.0 / 3.0) -> Dict[str, Optional[float]]:
    """Analytical compressive critical strains of the clamped-clamped column."""
    params = StabilityParams.for_rectangular(gamma, 1.0, h_over_L, SupportType.CLAMPED_BOTH)
    row: Dict[str, Optional[float]] = {}
    for model in (CompressionModel.EULER, CompressionModel.KIRCHHOFF, CompressionModel.REISSNER,
                  CompressionModel.ZIEGLER, CompressionModel.ENGESSER):
        try:
            row[model.value] = critical_compression(model, params)
        except NoBifurcationError:
            row[model.value] = None
    return row
