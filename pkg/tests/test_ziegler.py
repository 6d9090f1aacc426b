import numpy as np
import pytest

from shear_beam_analyzer.components.beam_core.tools import precompute_partial_resultants
from shear_beam_analyzer.components.reissner_integrator import tools as reissner
from shear_beam_analyzer.components.ziegler_integrator.tools import (
    shear_angle_residual,
    solve_shear_angle,
    sweep,
    sweep_linearized,
)
from shear_beam_analyzer.exceptions import ContractViolationError
from shear_beam_analyzer.models import (
    BeamElement,
    BeamModel,
    DistributedLoad,
    GeneralizedCoordinates,
    GeneralizedForces,
    SectionCompliances,
    ZieglerMidpointState,
)

STEP = 1e-6


class TestShearAngle:
    @pytest.mark.parametrize("phi, p1, p2", [(0.0, 0.0, 5.0), (0.4, -30.0, 12.0), (-1.2, 30.0, -20.0)])
    def test_root_satisfies_condition(self, phi, p1, p2, compliances):
        chi = solve_shear_angle(phi, p1, p2, compliances)
        residual, _ = shear_angle_residual(chi, phi, p1, p2, compliances.c_axial, 1.0 / compliances.c_shear)
        assert abs(residual) < 1e-9
        assert abs(chi) < 0.5 * np.pi

    def test_rigid_in_shear(self):
        assert solve_shear_angle(0.3, 1.0, 2.0, SectionCompliances(c_axial=0.01, c_shear=0.0, c_bend=1.0)) == 0.0

    def test_small_forces_match_linear_shear(self, compliances):
        # χ ≈ Q·c_shear for small forces on a straight section
        chi = solve_shear_angle(0.0, 0.0, -1e-4, compliances)
        assert chi == pytest.approx(1e-4 * compliances.c_shear, rel=1e-6)


class TestSweep:
    def test_record_satisfies_shear_condition(self, beam, origin, compliances):
        record = sweep(GeneralizedForces(fx=-5.0, fz=8.0, m=1.0), origin, beam)
        gas = 1.0 / compliances.c_shear
        np.testing.assert_allclose(gas * record.shear_strain, (1.0 + record.strain) * record.shear, atol=1e-10)
        assert record.formulation == BeamModel.ZIEGLER
        assert isinstance(record.midstate(1), ZieglerMidpointState)

    def test_matches_reissner_without_shear_compliance(self, rng):
        stiff_shear = SectionCompliances(c_axial=0.02, c_shear=0.0, c_bend=1.3)
        beam = BeamElement(length=1.4, segments=9, compliances=stiff_shear, rigid_offset_left=0.1)
        load = DistributedLoad(px=0.3, pz=[(0.0, 1.0), (1.4, -2.0)], m=0.1)
        resultants = precompute_partial_resultants(load, beam)
        for _ in range(10):
            f_a = GeneralizedForces.from_array(rng.uniform(-4.0, 4.0, 3))
            r_a = GeneralizedCoordinates.from_array(rng.uniform(-1.0, 1.0, 3))
            z_record = sweep(f_a, r_a, beam, resultants)
            r_record = reissner.sweep(f_a, r_a, beam, resultants)
            assert np.array_equal(z_record.coords, r_record.coords)
            assert np.array_equal(z_record.phi_grid, r_record.phi_grid)
            assert z_record.r_b == r_record.r_b
            assert z_record.mp_end == r_record.mp_end

    def test_small_load_close_to_reissner(self, beam, origin):
        f_a = GeneralizedForces(fx=0.01, fz=-0.02, m=0.005)
        z_record = sweep(f_a, origin, beam)
        r_record = reissner.sweep(f_a, origin, beam)
        np.testing.assert_allclose(z_record.coords, r_record.coords, atol=1e-6)


class TestLinearizedSweep:
    def test_matches_finite_differences(self, offset_beam, rng):
        resultants = precompute_partial_resultants(DistributedLoad(pz=2.0, m=-0.3), offset_beam)
        for _ in range(4):
            f_a = GeneralizedForces.from_array(rng.uniform(-6.0, 6.0, 3))
            r_a = GeneralizedCoordinates(phi=float(rng.uniform(-0.8, 0.8)))
            record = sweep(f_a, r_a, offset_beam, resultants)
            tangent = sweep_linearized(record, f_a, r_a, offset_beam, resultants)

            reference = []
            for j in range(4):
                delta = np.zeros(4)
                delta[j] = STEP
                ends = []
                for sign in (1.0, -1.0):
                    forces = GeneralizedForces.from_array(f_a.as_array() + sign * delta[:3])
                    start = r_a.model_copy(update={"phi": r_a.phi + sign * delta[3]})
                    r = sweep(forces, start, offset_beam, resultants)
                    ends.append(np.array([r.r_b.x, r.r_b.z, r.r_b.phi, r.mp_end]))
                reference.append((ends[0] - ends[1]) / (2.0 * STEP))
            reference = np.array(reference)
            np.testing.assert_allclose(tangent, reference, atol=1e-5 * np.abs(reference).max())

    def test_rejects_reissner_record(self, beam, origin):
        f_a = GeneralizedForces(fz=1.0)
        record = reissner.sweep(f_a, origin, beam)
        with pytest.raises(ContractViolationError):
            sweep_linearized(record, f_a, origin, beam)
