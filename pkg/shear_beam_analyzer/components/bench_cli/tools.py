# --- Bench commands: trace, converge, buckle, reference ---
import csv
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from ...config import CSV_SIGNIFICANT_DIGITS
from ...exceptions import BeamInputError, NoBifurcationError, NotCriticalError, NumericalConvergenceError
from ...models import (
    BeamModel,
    BucklingReport,
    CantileverMomentParams,
    CommandResult,
    CompressionModel,
    ConvergenceRow,
    DofKind,
    FrameModel,
    FrameState,
    LoadStep,
    PrescribedIncrement,
    StabilityParams,
    SupportType,
)
from ..element_api.tools import deformed_shape
from ..reference_solutions.tools import (
    cantilever_moment_shape,
    critical_compression,
    critical_loads_row,
    critical_tension_reissner,
    fresnel,
    postcritical_tension_ss,
    timoshenko_deflection,
)
from ..structure_solver.tools import FrameSolver, find_critical, initial_stiffness
from .cases import BenchCase, build_case

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
SOLVER_ERRORS = (NumericalConvergenceError, ArithmeticError)
ELEMENT_FORCE_NAMES = ("xa", "za", "ma", "xb", "zb", "mb")
SHAPE_COLUMNS = ["element", "xi", "x", "z", "phi", "axial", "shear", "moment"]


# --- Model files and CSV output ---

def load_model(path: PathLike) -> FrameModel:
    """Parse a JSON model file; pydantic reports the failing field or JSON position."""
    text = Path(path).read_text()
    return FrameModel.model_validate_json(text)


def save_model(model: FrameModel, path: PathLike) -> None:
    Path(path).write_text(model.model_dump_json(indent=2))


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{CSV_SIGNIFICANT_DIGITS}g}"
    return str(value)


def write_csv(path: Optional[PathLike], columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> Optional[str]:
    if path is None:
        return None
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(column)) for column in columns])
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return str(path)


def _failure(error: Exception, status: str) -> CommandResult:
    return CommandResult(error=str(error), status=status)


# --- Case evaluation ---

def member_length(solver: FrameSolver) -> float:
    return sum(element.beam.length for element in solver.elements)


def control_to_strain(solver: FrameSolver, control: float, axial_stiffness: Optional[float] = None) -> float:
    """Axial strain of a straight member from the control value of the schedule."""
    if solver.control_dof is not None:
        return abs(control) / member_length(solver)
    if axial_stiffness is None:
        axial_stiffness = 1.0 / solver.model.elements[0].base_compliances().c_axial
    return abs(control) * float(np.abs(solver.reference_load).max()) / axial_stiffness


def peak_reaction(state: FrameState, label: str) -> float:
    """Largest reaction in the sign it first takes, refined by a parabola through the peak sample."""
    values = np.array([record.reactions.get(label, 0.0) for record in state.history])
    if len(values) == 0:
        return 0.0
    sign = next((math.copysign(1.0, v) for v in values if v != 0.0), 1.0)
    signed = sign * values
    k = int(np.argmax(signed))
    peak = float(signed[k])
    if 0 < k < len(signed) - 1:
        controls = np.array([record.control for record in state.history[k - 1:k + 2]])
        if len(np.unique(controls)) == 3:
            a, b, c = np.polyfit(controls, signed[k - 1:k + 2], 2)
            if a < 0.0:
                peak = max(peak, float(c - b * b / (4.0 * a)))
    return peak


def evaluate_case(case: BenchCase) -> Tuple[float, Optional[FrameState]]:
    """Run a built-in case and return its reported scalar."""
    frame = case.frame
    if case.quantity == "stiffness":
        return initial_stiffness(frame, case.target.node, case.target.dof), None

    solver = FrameSolver(frame)
    state = solver.run()
    if case.quantity == "dof":
        value = abs(float(state.displacements[solver.dof_index(case.target.node, case.target.dof)]))
    elif case.quantity == "peak-reaction":
        value = case.reaction_factor * peak_reaction(state, case.target.label)
    else:
        critical = find_critical(state.history, frame.monitor.critical)
        value = control_to_strain(solver, critical.value, case.axial_stiffness)
    logger.info(f"Case {case.case_id}: {case.quantity} = {value:.9g}")
    return value, state


# --- Commands ---

def cmd_trace(
    model: Union[FrameModel, PathLike],
    out: Optional[PathLike] = None,
    shape_out: Optional[PathLike] = None,
) -> CommandResult:
    """Run a schedule and emit one CSV row per step."""
    try:
        frame = model if isinstance(model, FrameModel) else load_model(model)
        solver = FrameSolver(frame)
        state = solver.run()
    except (ValidationError, ValueError, OSError) as e:
        logger.error(f"Invalid model: {e}", exc_info=True)
        return _failure(e, "validation")
    except SOLVER_ERRORS as e:
        logger.error(f"Trace failed: {e}", exc_info=True)
        return _failure(e, "solver")

    monitored = [ref.label for ref in frame.monitor.dofs]
    forces = [f"e{element.id}_{name}" for element in frame.elements for name in ELEMENT_FORCE_NAMES]
    columns = ["step", "load_factor", "control"] + monitored + ["lowest_eigenvalue", "diagonal"] + forces
    rows = []
    for record in state.history:
        row: Dict[str, Any] = {
            "step": record.step,
            "load_factor": record.load_factor,
            "control": record.control,
            "lowest_eigenvalue": record.lowest_eigenvalue,
            "diagonal": record.diagonal,
        }
        row.update(record.monitored)
        for element, values in zip(frame.elements, record.end_forces):
            row.update({f"e{element.id}_{name}": v for name, v in zip(ELEMENT_FORCE_NAMES, values)})
        rows.append(row)

    path = write_csv(out, columns, rows)
    if shape_out is not None:
        write_csv(shape_out, SHAPE_COLUMNS, shape_rows(solver, state))
    return CommandResult(rows=rows, columns=columns, path=path)


def shape_rows(solver: FrameSolver, state: FrameState) -> List[Dict[str, Any]]:
    rows = []
    for element, element_state in zip(solver.elements, state.element_states):
        for point in deformed_shape(element_state.record, element.beam):
            rows.append({"element": element.id, **point.model_dump()})
    return rows


def convergence_rows(values: Sequence[Tuple[int, float]]) -> List[ConvergenceRow]:
    """Relative errors against the finest run and observed orders between consecutive rows."""
    ordered = sorted(values)
    reference = ordered[-1][1]
    rows: List[ConvergenceRow] = []
    for index, (segments, value) in enumerate(ordered):
        error = abs(value - reference) / abs(reference) if reference != 0.0 else abs(value - reference)
        order = None
        if index > 0:
            previous = rows[-1]
            if previous.relative_error and error > 0.0:
                order = math.log(previous.relative_error / error) / math.log(segments / previous.segments)
        rows.append(ConvergenceRow(segments=segments, value=value, relative_error=error, observed_order=order))
    return rows


def cmd_converge(case_id: str, segments: Sequence[int], out: Optional[PathLike] = None) -> CommandResult:
    """Run a built-in case at each resolution; the finest run is the reference."""
    if not segments:
        return _failure(BeamInputError("at least one segment count is required"), "validation")
    values = []
    try:
        for count in sorted(set(segments)):
            value, _ = evaluate_case(build_case(case_id, count))
            values.append((count, value))
    except (ValidationError, ValueError) as e:
        logger.error(f"Invalid case {case_id}: {e}", exc_info=True)
        return _failure(e, "validation")
    except SOLVER_ERRORS as e:
        logger.error(f"Case {case_id} failed: {e}", exc_info=True)
        return _failure(e, "solver")

    columns = ["segments", "value", "relative_error", "observed_order"]
    rows = [row.model_dump() for row in convergence_rows(values)]
    return CommandResult(rows=rows, columns=columns, path=write_csv(out, columns, rows))


def end_nodes(frame: FrameModel) -> Tuple[int, int]:
    incidence: Dict[int, int] = {}
    for element in frame.elements:
        for node in element.nodes:
            incidence[node] = incidence.get(node, 0) + 1
    ends = [node.id for node in frame.nodes if incidence.get(node.id) == 1]
    if len(ends) != 2:
        raise BeamInputError(f"expected a single straight member with two ends, found {len(ends)} end nodes")
    return ends[0], ends[1]


def member_span(frame: FrameModel) -> float:
    nodes = {n.id: n for n in frame.nodes}
    a, b = (nodes[i] for i in end_nodes(frame))
    return math.hypot(b.x - a.x, b.z - a.z)


def infer_stability(frame: FrameModel) -> StabilityParams:
    """Γ, slenderness and support type of a straight member described by a frame model."""
    nodes = {n.id: n for n in frame.nodes}
    a, b = (nodes[i] for i in end_nodes(frame))
    length = member_span(frame)
    base = frame.elements[0].base_compliances()
    if base.c_axial == 0.0 or base.c_bend == 0.0:
        raise BeamInputError("stability parameters need finite axial and bending stiffness")
    gamma = base.c_axial / base.c_shear if base.c_shear > 0.0 else 1.0
    radius = math.sqrt(base.c_axial / base.c_bend)

    def clamped(node) -> bool:
        return node.rot != DofKind.FREE

    def held(node) -> bool:
        return node.uz != DofKind.FREE

    if clamped(a) and clamped(b) and held(a) and held(b):
        support = SupportType.CLAMPED_BOTH
    elif not clamped(a) and not clamped(b) and held(a) and held(b):
        support = SupportType.SIMPLY_SUPPORTED
    elif (clamped(a) and held(a)) != (clamped(b) and held(b)) and not (held(a) and held(b)):
        support = SupportType.CLAMPED_ONE_END
    else:
        raise BeamInputError("end conditions match none of the supported stability cases")
    return StabilityParams(
        gamma=gamma,
        slenderness=StabilityParams.buckling_length(length, support) / radius,
        support=support,
    )


def analytical_critical(frame: FrameModel, mode: str) -> Optional[float]:
    params = infer_stability(frame)
    model = frame.elements[0].model
    try:
        if mode == "compression":
            return critical_compression(CompressionModel(model.value), params)
        if model != BeamModel.REISSNER:
            return None
        return critical_tension_reissner(params)
    except NoBifurcationError as e:
        logger.info(f"No analytical critical state: {e}")
        return None


def with_increment(frame: FrameModel, increment: float) -> FrameModel:
    """Replace the schedule by uniform steps of `increment` in strain covering the same range."""
    if not increment > 0.0:
        raise BeamInputError(f"increment must be positive, got {increment}")
    steps = frame.expanded_schedule()
    prescribed = [inc for step in steps for inc in step.prescribed]
    if prescribed:
        first = prescribed[0]
        total = sum(inc.value for inc in prescribed if (inc.node, inc.dof) == (first.node, first.dof))
        length = member_span(frame)
        size = math.copysign(increment * length, total)
        count = max(1, int(math.ceil(abs(total) / abs(size) - 1e-9)))
        schedule = [LoadStep(prescribed=[PrescribedIncrement(node=first.node, dof=first.dof, value=size)], repeat=count)]
    else:
        total = sum(step.load_factor for step in steps)
        reference = max(abs(v) for load in frame.nodal_loads for v in (load.fx, load.fz)) if frame.nodal_loads else 0.0
        if reference == 0.0:
            raise BeamInputError("load-controlled buckling needs a nodal reference force")
        size = math.copysign(increment / (reference * frame.elements[0].base_compliances().c_axial), total)
        count = max(1, int(math.ceil(abs(total) / abs(size) - 1e-9)))
        schedule = [LoadStep(load_factor=size, repeat=count)]
    return frame.model_copy(update={"schedule": schedule})


def cmd_buckle(
    model: Union[FrameModel, BenchCase, PathLike],
    mode: str = "compression",
    increment: Optional[float] = None,
) -> BucklingReport:
    """Critical strain by interpolating the sign change of the critical monitor."""
    if mode not in ("compression", "tension"):
        return BucklingReport(mode="compression", error=f"unknown mode '{mode}'", status="validation")
    try:
        if isinstance(model, BenchCase):
            frame, analytical, axial = model.frame, model.analytical, model.axial_stiffness
        else:
            frame = model if isinstance(model, FrameModel) else load_model(model)
            analytical, axial = analytical_critical(frame, mode), None
        if increment is not None:
            frame = with_increment(frame, increment)
        monitor = frame.monitor
        if monitor.critical == "none":
            monitor = monitor.model_copy(update={"critical": "eigenvalue"})
        frame = frame.model_copy(update={"monitor": monitor.model_copy(update={"stop_on_critical": True})})
        solver = FrameSolver(frame)
        state = solver.run()
    except (ValidationError, ValueError, OSError) as e:
        logger.error(f"Invalid buckling model: {e}", exc_info=True)
        return BucklingReport(mode=mode, error=str(e), status="validation")
    except SOLVER_ERRORS as e:
        logger.error(f"Buckling run failed: {e}", exc_info=True)
        return BucklingReport(mode=mode, error=str(e), status="solver")

    try:
        critical = find_critical(state.history, frame.monitor.critical)
    except NotCriticalError as e:
        logger.info(f"Not critical: {e}")
        return BucklingReport(mode=mode, analytical=analytical, critical=False)

    numerical = control_to_strain(solver, critical.value, axial)
    deviation = (numerical - analytical) / analytical if analytical else None
    logger.info(f"Critical strain ({mode}): numerical {numerical:.6f}, analytical {analytical}")
    return BucklingReport(
        mode=mode,
        numerical=numerical,
        analytical=analytical,
        relative_deviation=deviation,
        critical=True,
    )


def reference_table(table: str) -> Tuple[List[str], List[Dict[str, Any]]]:
    table = table.lower()
    if table == "critloads":
        columns = ["h_over_L", "euler", "kirchhoff", "reissner", "ziegler", "engesser"]
        rows = [{"h_over_L": h, **critical_loads_row(h)} for h in (1.0 / 6.0, 1.0 / 12.0)]
        return columns, rows
    if table == "critstrainten":
        columns = ["gamma", "one_clamped_h4", "one_clamped_h8", "clamped_both_h6", "simply_supported"]
        rows = []
        for gamma in (1.0 / 3.0, 0.1, 0.01):
            def strain(support: SupportType, h_over_L: float) -> float:
                return critical_tension_reissner(StabilityParams.for_rectangular(gamma, 1.0, h_over_L, support))
            rows.append({
                "gamma": gamma,
                "one_clamped_h4": strain(SupportType.CLAMPED_ONE_END, 0.25),
                "one_clamped_h8": strain(SupportType.CLAMPED_ONE_END, 0.125),
                "clamped_both_h6": strain(SupportType.CLAMPED_BOTH, 1.0 / 6.0),
                "simply_supported": strain(SupportType.SIMPLY_SUPPORTED, 0.25),
            })
        return columns, rows
    if table == "epszc":
        columns = ["slenderness", "strain"]
        rows = []
        for s in np.linspace(0.5, 40.0, 80):
            value = critical_compression(CompressionModel.ZIEGLER, StabilityParams(gamma=1.0 / 3.0, slenderness=float(s)))
            if value is not None:
                rows.append({"slenderness": float(s), "strain": value})
        return columns, rows
    if table == "fresnel":
        columns = ["x", "c", "s"]
        rows = [dict(zip(columns, (float(x), *fresnel(float(x))))) for x in np.linspace(0.0, 5.0, 51)]
        return columns, rows
    if table == "cantilever":
        columns = ["xi", "x", "z"]
        params = CantileverMomentParams.from_load(30.0, 1.0, 1.0)
        rows = [dict(zip(columns, (float(xi), *cantilever_moment_shape(params, float(xi))))) for xi in np.linspace(0.0, 1.0, 21)]
        return columns, rows
    if table == "postcritical":
        columns = ["phi", "force_ratio", "length_ratio"]
        rows = []
        for phi in np.linspace(0.0, 1.4, 29):
            branch = postcritical_tension_ss(float(phi), 1.0 / 3.0)
            rows.append({"phi": float(phi), "force_ratio": branch.force_ratio, "length_ratio": branch.length_ratio})
        return columns, rows
    if table == "timoshenko":
        columns = ["h_over_L", "midspan_stiffness", "clamped_uniform"]
        rows = [
            {
                "h_over_L": h,
                "midspan_stiffness": 1.0 / timoshenko_deflection("midspan-force", 1.0, h),
                "clamped_uniform": timoshenko_deflection("clamped-uniform", 300.0, h),
            }
            for h in (1.0 / 4.0, 1.0 / 6.0, 1.0 / 16.0, 1.0 / 64.0)
        ]
        return columns, rows
    raise BeamInputError(f"unknown table '{table}'")


REFERENCE_TABLES = ["critloads", "critstrainten", "epszc", "fresnel", "cantilever", "postcritical", "timoshenko"]


def cmd_reference(table: str, out: Optional[PathLike] = None) -> CommandResult:
    """Analytical columns and curve data from the closed-form solutions."""
    try:
        columns, rows = reference_table(table)
    except ValueError as e:
        logger.error(f"Reference table failed: {e}", exc_info=True)
        return _failure(e, "validation")
    return CommandResult(rows=rows, columns=columns, path=write_csv(out, columns, rows))
