import math

import numpy as np
import pytest

from shear_beam_analyzer.components.element_api.tools import (
    advance_rigid,
    deformed_shape,
    end_forces,
    formulation_for,
    run_sweep,
    scaled_resultants,
    tangent_stiffness,
    weighted_norm,
)
from shear_beam_analyzer.exceptions import ShootingConvergenceError
from shear_beam_analyzer.models import (
    BeamElement,
    BeamModel,
    DistributedLoad,
    GeneralizedCoordinates,
    GeneralizedForces,
    SectionCompliances,
)

STEP = 1e-5
TIGHT = 1e-13

CASES = [
    (BeamModel.REISSNER, None),
    (BeamModel.ZIEGLER, None),
    (BeamModel.REISSNER, DistributedLoad(pz=1.5, m=0.4)),
    (BeamModel.ZIEGLER, DistributedLoad(px=-0.5, pz=2.0)),
]


def converged_state(model, load, beam, rng, scale=3.0, warm=True):
    """A converged element state reached by shooting onto the end of a random forward sweep.

    With `warm` the shooting starts near the answer, otherwise from zero end forces.
    """
    f_a = GeneralizedForces.from_array(rng.uniform(-scale, scale, 3))
    r_a = GeneralizedCoordinates(x=0.2, z=-0.1, phi=float(rng.uniform(-0.6, 0.6)))
    record = run_sweep(model, f_a, r_a, beam, scaled_resultants(beam, load))
    guess = GeneralizedForces.from_array(0.9 * f_a.as_array()) if warm else None
    return f_a, end_forces(r_a, record.r_b, beam, load, model, f_a_guess=guess, tol=TIGHT)


def end_force_vector(state):
    return np.concatenate([state.f_a.as_array(), state.f_b.as_array()])


class TestShooting:
    @pytest.mark.parametrize("model, load", CASES)
    def test_recovers_forward_forces(self, model, load, beam, rng):
        for _ in range(3):
            f_a, state = converged_state(model, load, beam, rng, scale=1.0, warm=False)
            np.testing.assert_allclose(state.f_a.as_array(), f_a.as_array(), atol=1e-8)
            assert state.iterations <= 20

    @pytest.mark.parametrize("model, load", CASES)
    def test_whole_beam_equilibrium(self, model, load, beam, rng):
        _, state = converged_state(model, load, beam, rng)
        resultants = scaled_resultants(beam, load)
        assert state.f_a.fx + state.f_b.fx + resultants.px_end == pytest.approx(0.0, abs=1e-10)
        assert state.f_a.fz + state.f_b.fz + resultants.pz_end == pytest.approx(0.0, abs=1e-10)

    def test_unloaded_straight_element(self, beam, origin):
        state = end_forces(origin, GeneralizedCoordinates(x=1.0), beam)
        np.testing.assert_allclose(end_force_vector(state), 0.0, atol=1e-12)

    def test_stretched_element(self, beam, origin, compliances):
        stretch = 0.01
        state = end_forces(origin, GeneralizedCoordinates(x=1.0 + stretch), beam)
        axial = stretch / compliances.c_axial
        # element forces act on the beam: tension pulls end a backwards
        assert state.f_a.fx == pytest.approx(-axial, rel=1e-9)
        assert state.f_b.fx == pytest.approx(axial, rel=1e-9)

    def test_iteration_cap(self, beam, origin):
        with pytest.raises(ShootingConvergenceError) as info:
            end_forces(origin, GeneralizedCoordinates(x=0.5, z=0.5, phi=1.0), beam, max_iter=0)
        assert len(info.value.residuals) == 1

    def test_converges_from_zero_for_stiff_bent_element(self, origin):
        compliances = SectionCompliances.from_stiffness(1e8, 500.0, 10.0)
        stiff = BeamElement(length=1.0, segments=20, compliances=compliances)
        f_a = GeneralizedForces(fz=-4.0, m=-4.0)
        record = run_sweep(BeamModel.REISSNER, f_a, origin, stiff, scaled_resultants(stiff, None))
        assert record.r_b.phi > 0.3
        state = end_forces(origin, record.r_b, stiff, tol=TIGHT)
        assert state.residual <= TIGHT
        assert state.f_a.fz + state.f_b.fz == pytest.approx(0.0, abs=1e-8)
        np.testing.assert_allclose(state.r_b.as_array(), record.r_b.as_array(), atol=1e-12)

    @pytest.mark.parametrize("model, load", CASES)
    def test_converged_residual_meets_tolerance(self, model, load, beam, rng):
        for _ in range(3):
            _, state = converged_state(model, load, beam, rng, scale=1.0, warm=False)
            assert state.residual <= TIGHT

    def test_residual_above_tolerance_is_an_error(self, beam, origin):
        with pytest.raises(ShootingConvergenceError) as info:
            end_forces(origin, GeneralizedCoordinates(x=0.5, z=0.5, phi=1.0), beam, tol=1e-14, max_iter=1)
        assert info.value.residuals[-1] > 1e-14

    def test_tolerance_must_be_positive(self, beam, origin):
        with pytest.raises(ValueError):
            end_forces(origin, GeneralizedCoordinates(x=1.0), beam, tol=0.0)

    def test_kirchhoff_and_euler_use_reissner_sweep(self):
        assert formulation_for(BeamModel.KIRCHHOFF) == BeamModel.REISSNER
        assert formulation_for(BeamModel.EULER) == BeamModel.REISSNER
        assert formulation_for(BeamModel.ZIEGLER) == BeamModel.ZIEGLER


class TestTangentStiffness:
    @pytest.mark.parametrize("model, load", CASES)
    def test_matches_finite_differences(self, model, load, offset_beam, rng):
        for _ in range(5):
            _, state = converged_state(model, load, offset_beam, rng)
            k = tangent_stiffness(state).k
            ends = np.concatenate([state.r_a.as_array(), state.r_b.as_array()])
            reference = np.empty((6, 6))
            for j in range(6):
                forces = []
                for sign in (1.0, -1.0):
                    moved = ends.copy()
                    moved[j] += sign * STEP
                    perturbed = end_forces(
                        GeneralizedCoordinates.from_array(moved[:3]),
                        GeneralizedCoordinates.from_array(moved[3:]),
                        offset_beam,
                        load,
                        model,
                        f_a_guess=state.f_a,
                        tol=TIGHT,
                    )
                    forces.append(end_force_vector(perturbed))
                reference[:, j] = (forces[0] - forces[1]) / (2.0 * STEP)
            np.testing.assert_allclose(k, reference, atol=1e-5 * np.abs(reference).max())

    @pytest.mark.parametrize("model", [BeamModel.REISSNER, BeamModel.ZIEGLER])
    def test_rotation_covariance(self, model, offset_beam, rng):
        theta = 0.7
        c, s = math.cos(theta), math.sin(theta)
        rotation = np.array([[c, s], [-s, c]])
        transform = np.zeros((6, 6))
        for block in (slice(0, 2), slice(3, 5)):
            transform[block, block] = rotation
        transform[2, 2] = transform[5, 5] = 1.0

        _, state = converged_state(model, None, offset_beam, rng)
        ends = np.concatenate([state.r_a.as_array(), state.r_b.as_array()])
        turned = transform @ ends
        turned[[2, 5]] += theta
        guess = GeneralizedForces.from_array(transform[:3, :3] @ state.f_a.as_array())
        rotated = end_forces(
            GeneralizedCoordinates.from_array(turned[:3]),
            GeneralizedCoordinates.from_array(turned[3:]),
            offset_beam,
            model=model,
            f_a_guess=guess,
            tol=TIGHT,
        )
        scale = np.abs(end_force_vector(state)).max()
        np.testing.assert_allclose(end_force_vector(rotated), transform @ end_force_vector(state), atol=1e-9 * scale)
        k = tangent_stiffness(state).k
        k_rotated = tangent_stiffness(rotated).k
        np.testing.assert_allclose(k_rotated, transform @ k @ transform.T, atol=1e-8 * np.abs(k).max())

    def test_rigid_body_translation_is_force_free(self, beam, rng):
        _, state = converged_state(BeamModel.REISSNER, None, beam, rng)
        k = tangent_stiffness(state).k
        translation = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        np.testing.assert_allclose(k @ translation, 0.0, atol=1e-8 * np.abs(k).max())

    def test_straight_cantilever_stiffness(self, beam, origin, section):
        k = tangent_stiffness(end_forces(origin, GeneralizedCoordinates(x=1.0), beam)).k
        # end b of a cantilever clamped at a: tip compliance L³/3EI + L/GA_s
        k_bb = k[3:, 3:]
        compliance = np.linalg.inv(k_bb)
        assert compliance[0, 0] == pytest.approx(1.0 / section.ea, rel=1e-9)
        assert compliance[1, 1] == pytest.approx(1.0 / (3.0 * section.ei) + 1.0 / section.gas, rel=1e-2)


class TestHelpers:
    def test_advance_rigid(self):
        point = (0.0, 0.0, 0.25 * math.pi, 0.0)
        assert advance_rigid(point, 0.0) == point
        x, z, phi, _ = advance_rigid(point, math.sqrt(2.0))
        assert (x, z, phi) == pytest.approx((1.0, -1.0, 0.25 * math.pi))
        with pytest.raises(ValueError):
            advance_rigid(point, -1.0)

    def test_deformed_shape(self, beam, origin):
        record = run_sweep(BeamModel.REISSNER, GeneralizedForces(fz=-1.0, m=0.5), origin, beam, scaled_resultants(beam, None))
        shape = deformed_shape(record, beam)
        assert len(shape) == beam.segments
        assert shape[0].xi == pytest.approx(0.5 / beam.segments)
        assert shape[3].moment == pytest.approx(0.5 * (record.moment[3] + record.moment[4]))
        assert shape[3].phi == record.phi_mid[3]


class TestConvergenceOrder:
    @pytest.mark.parametrize("model", [BeamModel.REISSNER, BeamModel.ZIEGLER])
    def test_end_position_is_second_order(self, model, compliances, origin):
        f_a = GeneralizedForces(fx=1.0, fz=-2.0, m=0.5)

        def landing(segments):
            grid = BeamElement(length=1.0, segments=segments, compliances=compliances)
            return run_sweep(model, f_a, origin, grid, scaled_resultants(grid, None)).r_b.as_array()

        # Richardson extrapolation from the two finest grids
        reference = (4.0 * landing(512) - landing(256)) / 3.0
        errors = {n: weighted_norm(landing(n) - reference, 1.0) for n in (16, 32, 64)}
        for coarse, fine in ((16, 32), (32, 64)):
            order = math.log2(errors[coarse] / errors[fine])
            assert 1.9 <= order <= 2.1
