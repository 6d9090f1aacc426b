import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ...config import (
    BRANCH_SWITCH_ATTEMPTS,
    FRAME_SHOOTING_TOL,
    GLOBAL_MAX_ITER,
    GLOBAL_TOL,
    SHOOTING_MAX_ITER,
    STEP_CUTBACKS,
)
from ...exceptions import (
    BeamInputError,
    BranchSwitchError,
    ElementBifurcationError,
    NotCriticalError,
    NumericalConvergenceError,
    SingularMatrixError,
    StepConvergenceError,
)
from ...models import (
    DOF_NAMES,
    BeamElement,
    BeamModel,
    CriticalState,
    DofKind,
    DofRef,
    ElementSpec,
    ElementState,
    FrameModel,
    FrameState,
    GeneralizedCoordinates,
    LoadStep,
    NodalLoad,
    StepRecord,
    compliances_for_model,
)
from ..beam_core.tools import precompute_partial_resultants, zero_resultants
from ..dense_linalg.tools import lu_solve, sym_lowest_eigenvalue
from ..element_api.tools import end_forces, tangent_stiffness

logger = logging.getLogger(__name__)


class FrameElement:
    """An element of the frame: geometry from its nodes, reference resultants and DOF map."""

    def __init__(self, spec: ElementSpec, node_a, node_b, dofs: List[int]):
        dx = node_b.x - node_a.x
        dz = node_b.z - node_a.z
        length = math.hypot(dx, dz)
        if length == 0.0:
            raise BeamInputError(f"element {spec.id}: nodes {spec.nodes} coincide")
        self.spec = spec
        self.id = spec.id
        self.model = spec.model
        self.dofs = np.array(dofs)
        self.origin_a = np.array([node_a.x, node_a.z])
        self.origin_b = np.array([node_b.x, node_b.z])
        self.beam = BeamElement(
            length=length,
            initial_inclination=math.atan2(dz, dx),
            segments=spec.segments,
            compliances=compliances_for_model(spec.base_compliances(), spec.model, length),
            rigid_offset_left=spec.rigid_offset_left,
            rigid_offset_right=spec.rigid_offset_right,
        )
        if spec.load is not None and not spec.load.is_zero:
            self.reference = precompute_partial_resultants(spec.load, self.beam)
            self.base_scale = spec.load.scale
        else:
            self.reference = zero_resultants(self.beam)
            self.base_scale = 0.0

    def end_coordinates(self, u: np.ndarray) -> Tuple[GeneralizedCoordinates, GeneralizedCoordinates]:
        """End coordinates in the element convention φ = Φ − α_ab."""
        alpha = self.beam.initial_inclination
        ua = u[self.dofs[:3]]
        ub = u[self.dofs[3:]]
        r_a = GeneralizedCoordinates(x=self.origin_a[0] + ua[0], z=self.origin_a[1] + ua[1], phi=ua[2] - alpha)
        r_b = GeneralizedCoordinates(x=self.origin_b[0] + ub[0], z=self.origin_b[1] + ub[1], phi=ub[2] - alpha)
        return r_a, r_b

    def evaluate(self, u: np.ndarray, load_factor: float, guess: Optional[ElementState]):
        r_a, r_b = self.end_coordinates(u)
        resultants = self.reference.scaled(self.base_scale * load_factor)
        state = end_forces(
            r_a,
            r_b,
            self.beam,
            model=self.model,
            f_a_guess=guess.f_a if guess is not None else None,
            tol=FRAME_SHOOTING_TOL,
            max_iter=SHOOTING_MAX_ITER,
            resultants=resultants,
            element_id=self.id,
        )
        return state, tangent_stiffness(state).k


class FrameSolver:
    """Incremental-iterative Newton solver for a planar frame of shooting elements.

    Unknowns are the nodal (u_x, u_z, Φ) triples; prescribed DOFs follow the
    schedule and fixed DOFs stay at zero.
    """

    def __init__(self, model: FrameModel, tol: float = GLOBAL_TOL, max_iter: int = GLOBAL_MAX_ITER):
        if not tol > 0.0:
            raise ValueError(f"tol must be positive, got {tol}")
        self.model = model
        self.tol = tol
        self.max_iter = max_iter
        self.nodes = {n.id: n for n in model.nodes}
        self.index: Dict[Tuple[int, str], int] = {}
        kinds = []
        for node in model.nodes:
            for dof in DOF_NAMES:
                self.index[(node.id, dof)] = len(kinds)
                kinds.append(node.kind(dof))
        self.size = len(kinds)
        self.free = np.array([i for i, k in enumerate(kinds) if k == DofKind.FREE], dtype=int)
        self.prescribed = np.array([i for i, k in enumerate(kinds) if k == DofKind.PRESCRIBED], dtype=int)
        self.constrained = np.array([i for i, k in enumerate(kinds) if k != DofKind.FREE], dtype=int)
        self.labels = [f"{dof}_{node.id}" for node in model.nodes for dof in DOF_NAMES]
        self.rotational = np.array([dof == "rot" for _ in model.nodes for dof in DOF_NAMES])

        self.elements = []
        for spec in model.elements:
            a, b = (self.nodes[n] for n in spec.nodes)
            dofs = [self.index[(a.id, d)] for d in DOF_NAMES] + [self.index[(b.id, d)] for d in DOF_NAMES]
            self.elements.append(FrameElement(spec, a, b, dofs))
        self.length_scale = max(e.beam.length for e in self.elements) if self.elements else 1.0

        self.reference_load = np.zeros(self.size)
        for load in model.nodal_loads:
            for dof, value in zip(DOF_NAMES, (load.fx, load.fz, load.m)):
                self.reference_load[self.index[(load.node, dof)]] += value

        self.control_dof = self._control_dof()
        if self.control_dof is not None and any(e.model == BeamModel.EULER for e in self.elements):
            # axial shortening of Euler elements is a penalty effect, so they need load control
            raise BeamInputError(
                f"Euler elements cannot be driven by prescribed displacements ({self.control_dof}); "
                "use nodal loads and load-factor steps"
            )
        logger.info(
            f"Frame with {len(self.nodes)} nodes, {len(self.elements)} elements, "
            f"{len(self.free)} free DOFs, {len(self.prescribed)} prescribed"
        )

    def _control_dof(self) -> Optional[str]:
        for step in self.model.schedule:
            for inc in step.prescribed:
                return f"{inc.dof}_{inc.node}"
        return None

    def dof_index(self, node: int, dof: str) -> int:
        try:
            return self.index[(node, dof)]
        except KeyError:
            raise BeamInputError(f"unknown DOF {dof} of node {node}")

    def free_position(self, node: int, dof: str) -> int:
        index = self.dof_index(node, dof)
        where = np.nonzero(self.free == index)[0]
        if len(where) == 0:
            raise BeamInputError(f"{dof} of node {node} is not a free DOF")
        return int(where[0])

    def initial_state(self) -> FrameState:
        u = np.zeros(self.size)
        return FrameState(displacements=u, dof_values=u[self.free].copy())

    # --- assembly ---

    def assemble(self, u: np.ndarray, load_factor: float, guesses: Sequence[Optional[ElementState]],
                 extra_load: Optional[np.ndarray] = None):
        """Element states, out-of-balance vector Σ f_end − λF (− extra) and tangent."""
        residual = -load_factor * self.reference_load
        if extra_load is not None:
            residual = residual - extra_load
        tangent = np.zeros((self.size, self.size))
        states = []
        for element, guess in zip(self.elements, guesses):
            state, k = element.evaluate(u, load_factor, guess)
            forces = np.concatenate([state.f_a.as_array(), state.f_b.as_array()])
            np.add.at(residual, element.dofs, forces)
            tangent[np.ix_(element.dofs, element.dofs)] += k
            states.append(state)
        return states, residual, tangent

    def force_scale(self, states: List[ElementState], load_factor: float, extra_load=None) -> float:
        applied = load_factor * self.reference_load
        if extra_load is not None:
            applied = applied + extra_load
        weights = np.where(self.rotational, 1.0 / self.length_scale, 1.0)
        scale = float(np.abs(applied * weights).max()) if self.size else 0.0
        for s in states:
            ends = np.concatenate([s.f_a.as_array(), s.f_b.as_array()])
            ends[[2, 5]] /= self.length_scale
            scale = max(scale, float(np.abs(ends).max()))
        return scale

    def weighted_force(self, residual: np.ndarray, scale: float) -> float:
        r = residual[self.free] * np.where(self.rotational[self.free], 1.0 / self.length_scale, 1.0)
        if len(r) == 0:
            return 0.0
        if scale == 0.0:
            return float(np.abs(r).max())
        return float(np.linalg.norm(r) / scale)

    def weighted_correction(self, delta: np.ndarray) -> float:
        return float(np.linalg.norm(delta * np.where(self.rotational[self.free], 1.0, 1.0 / self.length_scale)))

    # --- equilibrium iteration ---

    def equilibrate(self, u: np.ndarray, load_factor: float, guesses, extra_load=None, step_index: int = 0):
        """Newton iteration on the free DOFs; returns (u, states, residual, tangent, iterations)."""
        u = u.copy()
        free = self.free
        history = []
        for iteration in range(self.max_iter + 1):
            try:
                states, residual, tangent = self.assemble(u, load_factor, guesses, extra_load)
            except (NumericalConvergenceError, ElementBifurcationError, ArithmeticError) as e:
                raise StepConvergenceError(
                    f"Step {step_index}: element evaluation failed at iteration {iteration}: {e}",
                    step_index=step_index,
                    last_iterate=u,
                    residuals=history,
                ) from e
            guesses = states
            force = self.weighted_force(residual, self.force_scale(states, load_factor, extra_load))
            history.append(force)
            logger.debug(f"Step {step_index} iteration {iteration}: weighted residual {force:.3e}")
            if force <= self.tol:
                return u, states, residual, tangent, iteration
            if iteration == self.max_iter:
                break
            try:
                delta = lu_solve(tangent[np.ix_(free, free)], -residual[free])
            except SingularMatrixError as e:
                raise StepConvergenceError(
                    f"Step {step_index}: singular structural tangent: {e}",
                    step_index=step_index,
                    last_iterate=u,
                    residuals=history,
                ) from e
            u[free] += delta
            if self.weighted_correction(delta) <= self.tol:
                states, residual, tangent = self.assemble(u, load_factor, states, extra_load)
                return u, states, residual, tangent, iteration + 1

        logger.error(f"Step {step_index} did not converge: residuals {history}")
        raise StepConvergenceError(
            f"Step {step_index} did not converge in {self.max_iter} iterations",
            step_index=step_index,
            last_iterate=u,
            residuals=history,
        )

    def stability(self, tangent: np.ndarray):
        free = self.free
        if len(free) == 0:
            return None, None
        return sym_lowest_eigenvalue(tangent[np.ix_(free, free)])

    def diagonal_monitor(self, tangent: np.ndarray, ref: DofRef) -> Optional[float]:
        """Pivot of the monitored DOF when it is eliminated last: 1/(K_ff⁻¹)_jj."""
        j = self.free_position(ref.node, ref.dof)
        k_ff = tangent[np.ix_(self.free, self.free)]
        try:
            column = lu_solve(k_ff, np.eye(len(self.free))[:, j])
        except SingularMatrixError:
            return 0.0
        return 1.0 / column[j]

    def make_state(self, previous: FrameState, u, states, residual, tangent, load_factor: float,
                   totals: Dict[str, float], iterations: int, step_index: int, record_history: bool = True) -> FrameState:
        lowest, mode = self.stability(tangent)
        reactions = {self.labels[i]: float(residual[i]) for i in self.constrained}
        control = totals.get(self.control_dof, 0.0) if self.control_dof is not None else load_factor
        history = list(previous.history)
        if record_history:
            monitor = self.model.monitor
            diagonal = None
            if monitor.diagonal is not None:
                diagonal = self.diagonal_monitor(tangent, monitor.diagonal)
            history.append(
                StepRecord(
                    step=step_index,
                    load_factor=load_factor,
                    control=control,
                    dof_values=[float(v) for v in u[self.free]],
                    monitored={ref.label: float(u[self.dof_index(ref.node, ref.dof)]) for ref in monitor.dofs},
                    lowest_eigenvalue=lowest,
                    diagonal=diagonal,
                    reactions=reactions,
                    end_forces=[list(np.concatenate([s.f_a.as_array(), s.f_b.as_array()])) for s in states],
                    iterations=iterations,
                )
            )
        return FrameState(
            displacements=u,
            dof_values=u[self.free].copy(),
            element_states=states,
            load_factor=load_factor,
            step_index=step_index,
            tangent=tangent,
            lowest_eigenvalue=lowest,
            lowest_mode=mode,
            control=control,
            prescribed_totals=totals,
            reactions=reactions,
            history=history,
        )

    def guesses(self, state: FrameState):
        if state.element_states:
            return list(state.element_states)
        return [None] * len(self.elements)

    def solve_step(self, state: FrameState, step: LoadStep) -> FrameState:
        step_index = state.step_index + 1
        load_factor = state.load_factor + step.load_factor
        du_p = np.zeros(self.size)
        totals = dict(state.prescribed_totals)
        for inc in step.prescribed:
            du_p[self.dof_index(inc.node, inc.dof)] += inc.value
            label = f"{inc.dof}_{inc.node}"
            totals[label] = totals.get(label, 0.0) + inc.value

        u, states, residual, tangent, iterations = self._advance(
            state.displacements, state.tangent, self.guesses(state), state.load_factor, load_factor, du_p, step_index
        )
        new_state = self.make_state(state, u, states, residual, tangent, load_factor, totals, iterations, step_index)
        logger.info(
            f"Step {step_index} converged in {iterations} iterations: load factor {load_factor:.6g}, "
            f"control {new_state.control:.6g}, lowest eigenvalue {new_state.lowest_eigenvalue}"
        )
        return new_state

    def predict(self, u: np.ndarray, tangent: Optional[np.ndarray], d_lambda: float, du_p: np.ndarray,
                step_index: int) -> np.ndarray:
        """Tangent predictor for the free DOFs given the load and prescribed increments."""
        u = u + du_p
        if tangent is not None and len(self.free):
            free = self.free
            rhs = d_lambda * self.reference_load[free] - tangent[np.ix_(free, self.prescribed)] @ du_p[self.prescribed]
            try:
                u[free] += lu_solve(tangent[np.ix_(free, free)], rhs)
            except SingularMatrixError:
                logger.warning(f"Step {step_index}: singular tangent, predictor skipped")
        return u

    def _advance(self, u0: np.ndarray, tangent0: Optional[np.ndarray], guesses, lam0: float, lam1: float,
                 du_p: np.ndarray, step_index: int, depth: int = 0):
        """Equilibrium at lam1 and u0 + du_p on the prescribed DOFs, halving the increment on failure."""
        u = self.predict(u0, tangent0, lam1 - lam0, du_p, step_index)
        try:
            return self.equilibrate(u, lam1, guesses, step_index=step_index)
        except StepConvergenceError as e:
            if depth >= STEP_CUTBACKS:
                logger.error(f"Step {step_index}: no convergence after {STEP_CUTBACKS} halvings")
                raise
            logger.warning(f"Step {step_index}: halving the increment (level {depth + 1}): {e}")
        middle = 0.5 * (lam0 + lam1)
        half = 0.5 * du_p
        u_mid, states_mid, _, tangent_mid, first = self._advance(
            u0, tangent0, guesses, lam0, middle, half, step_index, depth + 1
        )
        u, states, residual, tangent, second = self._advance(
            u_mid, tangent_mid, states_mid, middle, lam1, half, step_index, depth + 1
        )
        return u, states, residual, tangent, first + second

    def start(self) -> FrameState:
        """Equilibrium at zero load with zero prescribed displacements."""
        state = self.initial_state()
        u, states, residual, tangent, iterations = self.equilibrate(state.displacements, 0.0, self.guesses(state))
        return self.make_state(state, u, states, residual, tangent, 0.0, {}, iterations, 0, record_history=False)

    def run(self, state: Optional[FrameState] = None) -> FrameState:
        """Run the whole schedule; stops after a sign change of the monitor when requested."""
        if state is None:
            state = self.start()
        monitor = self.model.monitor
        for step in self.model.expanded_schedule():
            state = self.solve_step(state, step)
            if monitor.stop_on_critical and monitor.critical != "none" and len(state.history) >= 2:
                before, after = (monitored_value(r, monitor.critical) for r in state.history[-2:])
                if before is not None and after is not None and before * after <= 0.0 and before != 0.0:
                    logger.info(f"Sign change of the {monitor.critical} monitor at step {state.step_index}, stopping")
                    break
        return state

    def perturbation_vector(self, perturbation: Sequence[NodalLoad]) -> np.ndarray:
        vector = np.zeros(self.size)
        for load in perturbation:
            for dof, value in zip(DOF_NAMES, (load.fx, load.fz, load.m)):
                vector[self.dof_index(load.node, dof)] += value
        return vector

    def perturb_and_branch(self, state: FrameState, perturbation: Sequence[NodalLoad]) -> FrameState:
        extra = self.perturbation_vector(perturbation)
        lam = state.load_factor
        try:
            u, states, residual, tangent, _ = self.equilibrate(
                state.displacements, lam, self.guesses(state), extra_load=extra, step_index=state.step_index
            )
            lowest, mode = self.stability(tangent)
        except StepConvergenceError as e:
            logger.warning(f"Perturbed equilibrium from the current state failed: {e}")
            u, states, lowest, mode = state.displacements, list(state.element_states), state.lowest_eigenvalue, state.lowest_mode

        if lowest is not None and lowest < 0.0:
            u, states = self._escape_unstable(state, u, states, mode, extra)

        try:
            u, states, residual, tangent, iterations = self.equilibrate(u, lam, states, step_index=state.step_index)
        except StepConvergenceError as e:
            raise BranchSwitchError(
                f"Equilibrium after removing the perturbation failed: {e}",
                last_iterate=e.last_iterate,
                residuals=e.residuals,
            ) from e
        result = self.make_state(
            state, u, states, residual, tangent, lam, dict(state.prescribed_totals), iterations,
            state.step_index, record_history=False,
        )
        logger.info(f"Branch switching done: lowest eigenvalue {result.lowest_eigenvalue}")
        return result

    def _escape_unstable(self, state: FrameState, u, states, mode, extra):
        """Restart the perturbed iteration from states displaced along the lowest mode.

        Amplitudes double from 1e-3·L; at each one the side the perturbation pushes
        towards is tried first.
        """
        free = self.free
        shape = mode * np.where(self.rotational[free], 1.0 / self.length_scale, 1.0)
        if float(extra[free] @ mode) < 0.0:
            shape = -shape
        shape = shape / np.abs(shape).max()
        for attempt in range(BRANCH_SWITCH_ATTEMPTS):
            amplitude = 1e-3 * self.length_scale * 2.0 ** attempt
            for side in (1.0, -1.0):
                trial = state.displacements.copy()
                trial[free] += side * amplitude * shape
                try:
                    u_new, states_new, _, tangent, _ = self.equilibrate(
                        trial, state.load_factor, self.guesses(state), extra_load=extra, step_index=state.step_index
                    )
                except StepConvergenceError as e:
                    logger.debug(f"Branch attempt {attempt} (amplitude {side * amplitude:.3e}) failed: {e}")
                    continue
                lowest, _ = self.stability(tangent)
                logger.debug(f"Branch attempt {attempt}: amplitude {side * amplitude:.3e}, lowest eigenvalue {lowest}")
                if lowest is not None and lowest > 0.0:
                    return u_new, states_new
        raise BranchSwitchError(
            f"No stable perturbed equilibrium found in {BRANCH_SWITCH_ATTEMPTS} attempts",
            last_iterate=u,
        )


def monitored_value(record: StepRecord, monitor: str = "eigenvalue") -> Optional[float]:
    return record.diagonal if monitor == "diagonal" else record.lowest_eigenvalue


def solve_step(model: FrameModel, state: FrameState, step: LoadStep, solver: Optional[FrameSolver] = None) -> FrameState:
    solver = solver or FrameSolver(model)
    return solver.solve_step(state, step)


def find_critical(history: Sequence[StepRecord], monitor: str = "eigenvalue") -> CriticalState:
    """First sign change of the monitored quantity, linearly interpolated in the control parameter."""
    previous = None
    for record in history:
        value = monitored_value(record, monitor)
        if value is None:
            continue
        if previous is not None:
            before = monitored_value(previous, monitor)
            if before > 0.0 and value <= 0.0 or before < 0.0 and value >= 0.0:
                weight = before / (before - value)
                critical = previous.control + (record.control - previous.control) * weight
                logger.info(f"Critical {monitor} crossing between steps {previous.step} and {record.step}: {critical:.6g}")
                return CriticalState(value=critical, step=record.step, before=before, after=value)
        previous = record
    raise NotCriticalError(f"no sign change of the {monitor} monitor in {len(history)} steps")


def detect_critical(history: Sequence[StepRecord], monitor: str = "eigenvalue") -> float:
    return find_critical(history, monitor).value


def perturb_and_branch(model: FrameModel, state: FrameState, perturbation: Sequence[NodalLoad],
                       solver: Optional[FrameSolver] = None) -> FrameState:
    solver = solver or FrameSolver(model)
    return solver.perturb_and_branch(state, perturbation)


def initial_stiffness(model: FrameModel, node: int, dof: str) -> float:
    """Reciprocal of the compliance of one free DOF under the unloaded tangent."""
    solver = FrameSolver(model)
    state = solver.start()
    j = solver.free_position(node, dof)
    k_ff = state.tangent[np.ix_(solver.free, solver.free)]
    compliance = lu_solve(k_ff, np.eye(len(solver.free))[:, j])[j]
    return 1.0 / compliance


def run_model(model: FrameModel) -> FrameState:
    return FrameSolver(model).run()
