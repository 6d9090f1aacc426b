import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from shear_beam_analyzer.components.reference_solutions.tools import (
    cantilever_moment_shape,
    compression_residual,
    critical_compression,
    critical_force_compression,
    critical_force_tension,
    critical_loads_row,
    critical_tension_reissner,
    fresnel,
    postcritical_tension_ss,
    tensile_buckling_mode,
    tensile_mode_shear_ratio,
    tension_residual,
    timoshenko_deflection,
)
from shear_beam_analyzer.exceptions import ContractViolationError, NoBifurcationError
from shear_beam_analyzer.models import (
    CantileverMomentParams,
    CompressionModel,
    StabilityParams,
    SupportType,
    TimoshenkoCase,
)


def column(h_over_L, gamma=1.0 / 3.0):
    return StabilityParams.for_rectangular(gamma, 1.0, h_over_L, SupportType.CLAMPED_BOTH)


def bar(support, h_over_L, gamma=1.0 / 3.0):
    return StabilityParams.for_rectangular(gamma, 1.0, h_over_L, support)


class TestCompression:
    @pytest.mark.parametrize(
        "model, h_over_L, expected",
        [
            (CompressionModel.EULER, 1.0 / 6.0, 0.091385),
            (CompressionModel.REISSNER, 1.0 / 6.0, 0.078926),
            (CompressionModel.ZIEGLER, 1.0 / 6.0, 0.077770),
            (CompressionModel.EULER, 1.0 / 12.0, 0.022846),
            (CompressionModel.REISSNER, 1.0 / 12.0, 0.021888),
            (CompressionModel.ZIEGLER, 1.0 / 12.0, 0.021859),
        ],
    )
    def test_clamped_column(self, model, h_over_L, expected):
        assert critical_compression(model, column(h_over_L)) == pytest.approx(expected, abs=1e-6)

    def test_kirchhoff_closed_form(self):
        assert critical_compression(CompressionModel.KIRCHHOFF, column(1.0 / 6.0)) == pytest.approx(0.1017353, abs=1e-7)

    def test_model_ordering(self):
        row = critical_loads_row(1.0 / 6.0)
        assert row["engesser"] < row["ziegler"] < row["reissner"] < row["euler"] < row["kirchhoff"]
        assert set(row) == {model.value for model in CompressionModel}

    @pytest.mark.parametrize("model", list(CompressionModel))
    def test_residual_vanishes(self, model):
        params = column(1.0 / 10.0)
        strain = critical_compression(model, params)
        assert abs(compression_residual(model, strain, params)) < 1e-12

    def test_ziegler_without_bifurcation(self):
        # s² below π²(4 − 1/Γ)
        assert critical_compression(CompressionModel.ZIEGLER, StabilityParams(gamma=1.0 / 3.0, slenderness=3.0)) is None
        assert critical_force_compression(CompressionModel.ZIEGLER, StabilityParams(gamma=1.0 / 3.0, slenderness=3.0), 5.0) is None

    def test_reissner_with_unit_gamma_is_euler(self):
        params = StabilityParams(gamma=1.0, slenderness=25.0)
        euler = math.pi ** 2 / 25.0 ** 2
        assert critical_compression(CompressionModel.REISSNER, params) == pytest.approx(euler, abs=1e-12)

    def test_kirchhoff_without_real_root(self):
        with pytest.raises(NoBifurcationError):
            critical_compression(CompressionModel.KIRCHHOFF, StabilityParams(gamma=1.0 / 3.0, slenderness=5.0))

    def test_stocky_column_row(self):
        row = critical_loads_row(1.0)
        assert row["kirchhoff"] is None
        assert row["reissner"] is not None

    def test_force_scales_with_axial_stiffness(self):
        params = column(1.0 / 6.0)
        strain = critical_compression(CompressionModel.REISSNER, params)
        assert critical_force_compression(CompressionModel.REISSNER, params, 250.0) == pytest.approx(250.0 * strain)


class TestTension:
    @pytest.mark.parametrize(
        "gamma, one_clamped_h4, one_clamped_h8, clamped_h6",
        [
            (1.0 / 3.0, 0.512537, 0.503192, 0.522385),
            (0.1, 0.122744, 0.114636, 0.132805),
            (0.01, 0.017513, 0.012664, 0.026976),
        ],
    )
    def test_critical_strains(self, gamma, one_clamped_h4, one_clamped_h8, clamped_h6):
        assert critical_tension_reissner(bar(SupportType.CLAMPED_ONE_END, 0.25, gamma)) == pytest.approx(one_clamped_h4, abs=1e-6)
        assert critical_tension_reissner(bar(SupportType.CLAMPED_ONE_END, 0.125, gamma)) == pytest.approx(one_clamped_h8, abs=1e-6)
        assert critical_tension_reissner(bar(SupportType.CLAMPED_BOTH, 1.0 / 6.0, gamma)) == pytest.approx(clamped_h6, abs=1e-6)

    @pytest.mark.parametrize("gamma, expected", [(1.0 / 3.0, 0.5), (0.1, 1.0 / 9.0), (0.01, 1.0 / 99.0)])
    def test_simply_supported(self, gamma, expected):
        assert critical_tension_reissner(bar(SupportType.SIMPLY_SUPPORTED, 0.25, gamma)) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("support", list(SupportType))
    def test_residual_vanishes(self, support):
        params = bar(support, 1.0 / 6.0)
        assert abs(tension_residual(critical_tension_reissner(params), params)) < 1e-10

    @pytest.mark.parametrize("gamma", [1.0 / 3.0, 0.1, 0.01])
    def test_clamped_both_root_is_tight(self, gamma):
        params = bar(SupportType.CLAMPED_BOTH, 1.0 / 6.0, gamma)
        strain = critical_tension_reissner(params)
        assert tension_residual(strain * (1.0 - 1e-10), params) < 0.0
        assert tension_residual(strain * (1.0 + 1e-10), params) > 0.0

    def test_support_ordering(self):
        ss = critical_tension_reissner(bar(SupportType.SIMPLY_SUPPORTED, 1.0 / 6.0))
        one = critical_tension_reissner(bar(SupportType.CLAMPED_ONE_END, 1.0 / 6.0))
        both = critical_tension_reissner(bar(SupportType.CLAMPED_BOTH, 1.0 / 6.0))
        assert ss < one < both

    def test_no_tensile_bifurcation_for_unit_gamma(self):
        with pytest.raises(NoBifurcationError):
            critical_tension_reissner(StabilityParams(gamma=1.0, slenderness=20.0))
        with pytest.raises(NoBifurcationError):
            postcritical_tension_ss(0.1, 1.5)

    def test_force(self):
        params = bar(SupportType.SIMPLY_SUPPORTED, 0.25)
        assert critical_force_tension(params, 192.0) == pytest.approx(96.0)


class TestTensileModes:
    def test_simply_supported_mode_is_rigid_rotation(self):
        params = bar(SupportType.SIMPLY_SUPPORTED, 0.25)
        assert tensile_buckling_mode(params, 0.3) == (1.0, 0.0)

    def test_one_clamped_mode(self):
        params = bar(SupportType.CLAMPED_ONE_END, 0.25)
        assert tensile_buckling_mode(params, 0.0) == pytest.approx((0.0, 0.0), abs=1e-15)
        rotation, _ = tensile_buckling_mode(params, 1.0)
        assert rotation == pytest.approx(1.0)

    def test_clamped_both_mode_boundary_values(self):
        params = bar(SupportType.CLAMPED_BOTH, 1.0 / 6.0)
        for end in (0.0, 1.0):
            rotation, deflection = tensile_buckling_mode(params, end)
            assert rotation == pytest.approx(0.0, abs=1e-12)
            assert deflection == pytest.approx(0.0, abs=1e-8)
        rotation, _ = tensile_buckling_mode(params, 0.5)
        assert rotation == pytest.approx(1.0)

    def test_strain_must_be_critical(self):
        params = bar(SupportType.CLAMPED_ONE_END, 0.25)
        critical = critical_tension_reissner(params)
        tensile_buckling_mode(params, 0.5, strain=critical)
        with pytest.raises(ContractViolationError):
            tensile_buckling_mode(params, 0.5, strain=1.000001 * critical)

    def test_position_range(self):
        with pytest.raises(ValueError):
            tensile_buckling_mode(bar(SupportType.CLAMPED_ONE_END, 0.25), 1.5)

    def test_shear_dominates_mode(self):
        params = StabilityParams(gamma=1.0 / 3.0, slenderness=20.0, support=SupportType.CLAMPED_ONE_END)
        assert tensile_mode_shear_ratio(params) == pytest.approx(33.3, abs=0.1)


class TestPostCritical:
    def test_branch_at_sixty_degrees(self):
        branch = postcritical_tension_ss(math.pi / 3.0, 1.0 / 3.0)
        assert branch.force_ratio == pytest.approx(1.0)
        assert branch.length_ratio == pytest.approx(3.0)

    @pytest.mark.parametrize("phi", [0.0, 0.2, 0.7, 1.3])
    def test_length_matches_elongation(self, phi):
        branch = postcritical_tension_ss(phi, 0.25)
        assert branch.length_ratio == pytest.approx(branch.elongation_check, rel=1e-13)

    def test_starts_at_critical_strain(self):
        assert postcritical_tension_ss(0.0, 1.0 / 3.0).force_ratio == pytest.approx(0.5)

    def test_rotation_range(self):
        with pytest.raises(ValueError):
            postcritical_tension_ss(0.5 * math.pi, 1.0 / 3.0)


class TestClosedForms:
    @pytest.mark.parametrize("x", [0.0, 0.5, 1.7, 3.0])
    def test_fresnel_matches_quadrature(self, x):
        c, s = fresnel(x)
        assert c == pytest.approx(quad(lambda v: math.cos(v * v), 0.0, x, limit=200, epsabs=1e-13, epsrel=1e-13)[0], abs=1e-10)
        assert s == pytest.approx(quad(lambda v: math.sin(v * v), 0.0, x, limit=200, epsabs=1e-13, epsrel=1e-13)[0], abs=1e-10)

    def test_fresnel_limit(self):
        c, s = fresnel(60.0)
        assert c == pytest.approx(0.5 * math.sqrt(0.5 * math.pi), abs=1e-2)
        assert s == pytest.approx(0.5 * math.sqrt(0.5 * math.pi), abs=1e-2)
        with pytest.raises(ValueError):
            fresnel(-1.0)

    @pytest.mark.parametrize("moment", [2.0, 30.0])
    def test_cantilever_shape_matches_integration(self, moment):
        params = CantileverMomentParams.from_load(moment, 1.0, 1.0)

        def centerline(xi, y):
            phi = moment * (xi - 0.5 * xi * xi)
            return [math.cos(phi), math.sin(phi)]

        positions = [0.25, 0.6, 1.0]
        solution = solve_ivp(centerline, (0.0, 1.0), [0.0, 0.0], t_eval=positions, rtol=1e-12, atol=1e-12)
        for i, xi in enumerate(positions):
            x, z = cantilever_moment_shape(params, xi)
            assert x == pytest.approx(solution.y[0, i], abs=1e-8)
            assert z == pytest.approx(solution.y[1, i], abs=1e-8)

    def test_cantilever_without_load(self):
        params = CantileverMomentParams(mu=0.0)
        assert cantilever_moment_shape(params, 0.4) == (0.4, 0.0)
        assert cantilever_moment_shape(params, 0.0) == (0.0, 0.0)

    def test_timoshenko_deflections(self):
        assert 1.0 / timoshenko_deflection(TimoshenkoCase.MIDSPAN_FORCE, 1.0, 0.25) == pytest.approx(48.0 / 1.1875)
        assert timoshenko_deflection("clamped-uniform", 300.0, 1.0 / 6.0) == pytest.approx(300.0 * (4.0 / 3.0) / 384.0)
        # slender limit of the midspan stiffness
        assert 1.0 / timoshenko_deflection("midspan-force", 1.0, 1e-6) == pytest.approx(48.0)
        with pytest.raises(ValueError):
            timoshenko_deflection("midspan-force", 1.0, 0.0)

    def test_slenderness_for_rectangle(self):
        params = column(1.0 / 6.0)
        assert params.slenderness == pytest.approx(0.5 * 6.0 * np.sqrt(12.0))
