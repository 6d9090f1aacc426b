import math

import numpy as np
import pytest
from pydantic import ValidationError

from shear_beam_analyzer.components.beam_core.tools import (
    check_resultants,
    compliances_at,
    precompute_partial_resultants,
    rigid_step,
    sample_density,
    zero_resultants,
)
from shear_beam_analyzer.exceptions import BeamInputError, ContractViolationError
from shear_beam_analyzer.models import (
    ArmLoad,
    BeamElement,
    BeamModel,
    ConcentratedForce,
    DistributedLoad,
    SectionCompliances,
    SectionProperties,
    compliances_for_model,
)


class TestSections:
    def test_from_ratio(self):
        section = SectionProperties.from_ratio(1.0, 0.25)
        assert section.ea == pytest.approx(192.0)
        assert section.gas == pytest.approx(64.0)
        assert section.gamma == pytest.approx(1.0 / 3.0)

    def test_rectangular_poisson_quarter_gives_one_third(self):
        section = SectionProperties.rectangular(e=2.0e5, nu=0.25, b=0.1, h=0.3)
        assert section.gamma == pytest.approx(1.0 / 3.0)
        assert section.ei == pytest.approx(2.0e5 * 0.1 * 0.3 ** 3 / 12.0)

    def test_infinite_stiffness_is_zero_compliance(self):
        c = SectionCompliances.from_stiffness(100.0, math.inf, 2.0)
        assert c.c_shear == 0.0
        assert c.c_axial == pytest.approx(0.01)

    def test_negative_compliance_rejected(self):
        with pytest.raises(ValidationError):
            SectionCompliances(c_axial=-1.0)

    def test_model_degenerations(self, compliances):
        kirchhoff = compliances_for_model(compliances, BeamModel.KIRCHHOFF, 2.0)
        assert kirchhoff.c_shear == 0.0
        assert kirchhoff.c_axial == compliances.c_axial
        euler = compliances_for_model(compliances, BeamModel.EULER, 2.0)
        assert euler.c_shear == 0.0
        assert 0.0 < euler.c_axial < 1e-6 * compliances.c_axial


class TestBeamElement:
    def test_grid(self, offset_beam):
        grid = offset_beam.grid_points()
        assert grid[0] == pytest.approx(0.1)
        assert grid[-1] == pytest.approx(1.2 - 0.15)
        assert offset_beam.segment_length == pytest.approx(0.95 / 12)
        assert len(offset_beam.midpoints()) == 12

    def test_offsets_must_leave_flexible_part(self, compliances):
        with pytest.raises(ValidationError):
            BeamElement(length=1.0, segments=4, compliances=compliances, rigid_offset_left=0.6, rigid_offset_right=0.4)

    def test_per_segment_compliances(self, compliances):
        stiff = SectionCompliances(c_axial=0.0, c_shear=0.0, c_bend=0.5)
        beam = BeamElement(length=1.0, segments=3, compliances=[compliances, stiff, compliances])
        assert compliances_at(beam, 2) == stiff
        with pytest.raises(BeamInputError):
            compliances_at(beam, 4)

    def test_wrong_compliance_count(self, compliances):
        with pytest.raises(ValidationError):
            BeamElement(length=1.0, segments=3, compliances=[compliances, compliances])


class TestPartialResultants:
    def test_constant_density(self, beam):
        resultants = precompute_partial_resultants(DistributedLoad(pz=3.0), beam)
        np.testing.assert_allclose(resultants.pz_half, 3.0 * beam.midpoints(), rtol=1e-14)
        np.testing.assert_allclose(resultants.px_half, 0.0)
        assert resultants.pz_end == pytest.approx(3.0)
        assert resultants.has_load

    def test_table_and_callable_agree(self, beam):
        table = precompute_partial_resultants(DistributedLoad(px=[(0.0, 0.0), (1.0, 2.0)]), beam)
        function = precompute_partial_resultants(DistributedLoad(px=lambda xi: 2.0 * xi), beam)
        # trapezoidal integration is exact for a linear density
        np.testing.assert_allclose(table.px_half, beam.midpoints() ** 2, atol=1e-14)
        np.testing.assert_allclose(function.px_half, table.px_half, atol=1e-14)
        assert table.px_end == pytest.approx(1.0)

    def test_point_force_acts_past_its_position(self, beam):
        load = DistributedLoad(point_forces=[ConcentratedForce(position=0.3, fz=2.0)])
        resultants = precompute_partial_resultants(load, beam)
        expected = np.where(beam.midpoints() > 0.3, 2.0, 0.0)
        np.testing.assert_allclose(resultants.pz_half, expected)
        assert resultants.pz_end == 2.0

    def test_arms_sample_their_midpoints(self, offset_beam):
        resultants = precompute_partial_resultants(DistributedLoad(px=1.5, m=0.25), offset_beam)
        assert resultants.left_arm.length == pytest.approx(0.1)
        assert resultants.left_arm.px == pytest.approx(1.5 * 0.05)
        assert resultants.right_arm.px == pytest.approx(1.5 * (1.2 - 0.075))
        assert resultants.right_arm.m == pytest.approx(0.25)
        assert resultants.px_end == pytest.approx(1.8)

    def test_scaling(self, beam):
        resultants = precompute_partial_resultants(DistributedLoad(pz=1.0), beam)
        doubled = resultants.scaled(2.0)
        np.testing.assert_allclose(doubled.pz_half, 2.0 * resultants.pz_half)
        assert not resultants.scaled(0.0).has_load

    def test_zero_load(self, offset_beam):
        resultants = zero_resultants(offset_beam)
        assert not resultants.has_load
        assert resultants.left_arm.length == pytest.approx(0.1)
        assert resultants.pz_end == 0.0

    def test_table_must_cover_beam(self, beam):
        with pytest.raises(BeamInputError):
            precompute_partial_resultants(DistributedLoad(pz=[(0.0, 1.0), (0.5, 1.0)]), beam)

    def test_non_finite_sample(self, beam):
        with pytest.raises(BeamInputError):
            sample_density(lambda xi: math.nan, beam.midpoints(), "pz")

    def test_point_force_outside_beam(self, beam):
        load = DistributedLoad(point_forces=[ConcentratedForce(position=1.5, fx=1.0)])
        with pytest.raises(BeamInputError):
            precompute_partial_resultants(load, beam)

    def test_mismatched_grid(self, beam, offset_beam):
        with pytest.raises(ContractViolationError):
            check_resultants(offset_beam, zero_resultants(beam))


class TestRigidStep:
    def test_unloaded_arm(self):
        x, z, phi, mp = rigid_step(1.0, 2.0, 0.5 * math.pi, 0.0, ArmLoad(length=0.2))
        assert x == pytest.approx(1.0)
        assert z == pytest.approx(1.8)
        assert phi == 0.5 * math.pi
        assert mp == pytest.approx(0.0, abs=1e-15)

    def test_load_moment(self):
        _, _, _, mp = rigid_step(0.0, 0.0, 0.0, 1.0, ArmLoad(length=0.5, px=2.0, pz=3.0, m=4.0))
        # dz = 0, dx = 0.5
        assert mp == pytest.approx(1.0 - 3.0 * 0.5 - 4.0 * 0.5)
