"""Built-in benchmark models, addressed by ids of the form name[:model][:parameter]."""
import logging
import math
from typing import Callable, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel

from ...config import CASE_ID_PATTERN
from ...exceptions import BeamInputError, NoBifurcationError
from ...models import (
    BeamModel,
    CompressionModel,
    DistributedLoad,
    DofKind,
    DofRef,
    ElementSpec,
    FrameModel,
    LoadStep,
    MonitorSpec,
    NodalLoad,
    NodeSpec,
    PrescribedIncrement,
    SectionProperties,
    StabilityParams,
    SupportType,
)
from ..reference_solutions.tools import critical_compression, critical_tension_reissner

logger = logging.getLogger(__name__)

FIXED = DofKind.FIXED
PRESCRIBED = DofKind.PRESCRIBED
STRAIN_INCREMENT = 0.001


class BenchCase(BaseModel):
    """A frame model together with the scalar a benchmark reports."""

    case_id: str
    frame: FrameModel
    quantity: Literal["dof", "stiffness", "peak-reaction", "critical"]
    target: Optional[DofRef] = None
    reaction_factor: float = 1.0
    length: float = 1.0
    axial_stiffness: Optional[float] = None
    mode: Optional[Literal["compression", "tension"]] = None
    stability: Optional[StabilityParams] = None
    analytical: Optional[float] = None


def parse_case_id(case_id: str) -> Tuple[str, Optional[BeamModel], Optional[float]]:
    match = CASE_ID_PATTERN.match(case_id.strip())
    if match is None:
        raise BeamInputError(f"malformed case id '{case_id}', expected name[:model][:parameter]")
    model = BeamModel(match.group("model").lower()) if match.group("model") else None
    ratio = match.group("ratio")
    parameter = None
    if ratio is not None:
        numerator, _, denominator = ratio.partition("/")
        parameter = float(numerator) / float(denominator) if denominator else float(numerator)
    return match.group("name").lower(), model, parameter


def _section(model: BeamModel, h_over_L: float, gamma: float = 1.0 / 3.0) -> Dict[str, float]:
    section = SectionProperties.from_ratio(1.0, h_over_L, gamma)
    return {"ea": section.ea, "gas": section.gas, "ei": section.ei}


def _schedule_to(target: float, increment: float, start_fraction: float = 0.9) -> List[float]:
    """A large first increment close to `target`, then uniform increments past it."""
    first = math.floor(start_fraction * target / increment) * increment
    steps = [first] if first > 0.0 else []
    count = int(math.ceil((1.3 * target - first) / increment)) + 1
    return steps + [increment] * count


def _prescribed_steps(node: int, dof: str, increments: List[float]) -> List[LoadStep]:
    steps: List[LoadStep] = []
    for value in increments:
        step = LoadStep(prescribed=[PrescribedIncrement(node=node, dof=dof, value=value)])
        if steps and steps[-1].prescribed[0].value == value:
            steps[-1] = steps[-1].model_copy(update={"repeat": steps[-1].repeat + 1})
        else:
            steps.append(step)
    return steps


def ss_midforce(model: BeamModel, h_over_L: Optional[float], segments: int, force: float = 50.0) -> BenchCase:
    """Simply supported beam of unit span, midspan force F·EI/L²."""
    h_over_L = h_over_L or 0.25
    section = _section(model, h_over_L)
    frame = FrameModel(
        nodes=[
            NodeSpec(id=1, x=0.0, z=0.0, ux=FIXED, uz=FIXED),
            NodeSpec(id=2, x=0.5, z=0.0),
            NodeSpec(id=3, x=1.0, z=0.0, uz=FIXED),
        ],
        elements=[
            ElementSpec(id=1, nodes=(1, 2), model=model, segments=segments, **section),
            ElementSpec(id=2, nodes=(2, 3), model=model, segments=segments, **section),
        ],
        nodal_loads=[NodalLoad(node=2, fz=force)],
        schedule=[LoadStep(load_factor=0.1, repeat=10)],
        monitor=MonitorSpec(dofs=[DofRef(node=2, dof="uz")], critical="none"),
    )
    return BenchCase(case_id="ss-midforce", frame=frame, quantity="dof", target=DofRef(node=2, dof="uz"))


def ss_stiffness(model: BeamModel, h_over_L: Optional[float], segments: int) -> BenchCase:
    """Initial stiffness L³/(EI·w) of the simply supported beam under a unit midspan force."""
    case = ss_midforce(model, h_over_L, segments, force=1.0)
    return case.model_copy(update={"case_id": "ss-stiffness", "quantity": "stiffness"})


def clamped_uniform(model: BeamModel, h_over_L: Optional[float], segments: int, load: float = 300.0) -> BenchCase:
    """Beam clamped at both ends under a uniform transverse load f·EI/L³."""
    h_over_L = h_over_L or 1.0 / 6.0
    section = _section(model, h_over_L)
    distributed = DistributedLoad(pz=load)
    frame = FrameModel(
        nodes=[
            NodeSpec(id=1, x=0.0, z=0.0, ux=FIXED, uz=FIXED, rot=FIXED),
            NodeSpec(id=2, x=0.5, z=0.0),
            NodeSpec(id=3, x=1.0, z=0.0, ux=FIXED, uz=FIXED, rot=FIXED),
        ],
        elements=[
            ElementSpec(id=1, nodes=(1, 2), model=model, segments=segments, load=distributed, **section),
            ElementSpec(id=2, nodes=(2, 3), model=model, segments=segments, load=distributed, **section),
        ],
        schedule=[LoadStep(load_factor=0.1, repeat=10)],
        monitor=MonitorSpec(dofs=[DofRef(node=2, dof="uz")], critical="none"),
    )
    return BenchCase(case_id="clamped-uniform", frame=frame, quantity="dof", target=DofRef(node=2, dof="uz"))


def _cantilever_tip_force(case_id: str, gas: float, model: BeamModel, force: Optional[float], segments: int) -> BenchCase:
    # half of the tabulated force acts on the cantilever
    force = force or 20.0
    frame = FrameModel(
        nodes=[
            NodeSpec(id=1, x=0.0, z=0.0, ux=FIXED, uz=FIXED, rot=FIXED),
            NodeSpec(id=2, x=1.0, z=0.0),
        ],
        elements=[ElementSpec(id=1, nodes=(1, 2), model=model, segments=segments, ea=1e8, gas=gas, ei=10.0)],
        nodal_loads=[NodalLoad(node=2, fz=0.5 * force)],
        schedule=[LoadStep(load_factor=0.05, repeat=20)],
        monitor=MonitorSpec(dofs=[DofRef(node=2, dof="uz")], critical="none"),
    )
    return BenchCase(case_id=case_id, frame=frame, quantity="dof", target=DofRef(node=2, dof="uz"))


def tip_force_shear(model: BeamModel, force: Optional[float], segments: int) -> BenchCase:
    return _cantilever_tip_force("tip-force-shear", 500.0, model, force, segments)


def tip_force_rigid(model: BeamModel, force: Optional[float], segments: int) -> BenchCase:
    return _cantilever_tip_force("tip-force-rigid", 5e20, model, force, segments)


def cantilever_moment(model: BeamModel, moment: Optional[float], segments: int, steps: int = 60) -> BenchCase:
    """Cantilever of unit length under a uniform distributed moment m·EI/L²."""
    moment = moment or 30.0
    section = _section(model, 0.01)
    frame = FrameModel(
        nodes=[
            NodeSpec(id=1, x=0.0, z=0.0, ux=FIXED, uz=FIXED, rot=FIXED),
            NodeSpec(id=2, x=1.0, z=0.0),
        ],
        elements=[
            ElementSpec(id=1, nodes=(1, 2), model=model, segments=segments, load=DistributedLoad(m=moment), **section)
        ],
        schedule=[LoadStep(load_factor=1.0 / steps, repeat=steps)],
        monitor=MonitorSpec(dofs=[DofRef(node=2, dof="ux"), DofRef(node=2, dof="uz")], critical="none"),
    )
    return BenchCase(case_id="cantilever-moment", frame=frame, quantity="dof", target=DofRef(node=2, dof="uz"))


def dome(model: BeamModel, offset: Optional[float], segments: int, increment: float = 0.0125, steps: int = 112) -> BenchCase:
    """Half of a shallow dome member: clamped base, apex pushed down under symmetry conditions.

    `offset` is the total rigid fraction of the member length, split evenly between its ends.
    """
    offset = offset or 0.0
    span, rise = 15.0, 0.6
    section = SectionProperties.rectangular(e=1e7, nu=0.3, b=0.14, h=0.17)
    length = math.hypot(span, rise)
    frame = FrameModel(
        nodes=[
            NodeSpec(id=1, x=0.0, z=0.0, ux=FIXED, uz=FIXED, rot=FIXED),
            NodeSpec(id=2, x=span, z=-rise, ux=FIXED, uz=PRESCRIBED, rot=FIXED),
        ],
        elements=[
            ElementSpec(
                id=1,
                nodes=(1, 2),
                model=model,
                segments=segments,
                ea=section.ea,
                gas=section.gas,
                ei=section.ei,
                rigid_offset_left=0.5 * offset * length,
                rigid_offset_right=0.5 * offset * length,
            )
        ],
        schedule=[LoadStep(prescribed=[PrescribedIncrement(node=2, dof="uz", value=increment)], repeat=steps)],
        monitor=MonitorSpec(dofs=[DofRef(node=2, dof="uz")], critical="none"),
    )
    # three members meet at the apex
    return BenchCase(
        case_id="dome",
        frame=frame,
        quantity="peak-reaction",
        target=DofRef(node=2, dof="uz"),
        reaction_factor=3.0,
        length=length,
    )


def column(model: BeamModel, h_over_L: Optional[float], segments: int, increment: float = STRAIN_INCREMENT) -> BenchCase:
    """Clamped-clamped column in compression, two elements, diagonal monitor at midspan."""
    h_over_L = h_over_L or 1.0 / 6.0
    section = _section(model, h_over_L)
    params = StabilityParams.for_rectangular(1.0 / 3.0, 1.0, h_over_L, SupportType.CLAMPED_BOTH)
    analytical = critical_compression(CompressionModel(model.value), params)
    target = analytical if analytical is not None else critical_compression(CompressionModel.EULER, params)
    increments = _schedule_to(target, increment)
    elements = [
        ElementSpec(id=1, nodes=(1, 2), model=model, segments=segments, **section),
        ElementSpec(id=2, nodes=(2, 3), model=model, segments=segments, **section),
    ]
    monitor = MonitorSpec(critical="diagonal", diagonal=DofRef(node=2, dof="uz"), stop_on_critical=True)

    if model == BeamModel.EULER:
        # axial strain is a penalty effect here: drive by force, load factor equals P/EA
        frame = FrameModel(
            nodes=[
                NodeSpec(id=1, x=0.0, z=0.0, uz=FIXED, rot=FIXED),
                NodeSpec(id=2, x=0.5, z=0.0),
                NodeSpec(id=3, x=1.0, z=0.0, ux=FIXED, uz=FIXED, rot=FIXED),
            ],
            elements=elements,
            nodal_loads=[NodalLoad(node=1, fx=section["ea"])],
            schedule=[LoadStep(load_factor=value) for value in increments],
            monitor=monitor,
        )
    else:
        frame = FrameModel(
            nodes=[
                NodeSpec(id=1, x=0.0, z=0.0, ux=PRESCRIBED, uz=FIXED, rot=FIXED),
                NodeSpec(id=2, x=0.5, z=0.0),
                NodeSpec(id=3, x=1.0, z=0.0, ux=FIXED, uz=FIXED, rot=FIXED),
            ],
            elements=elements,
            schedule=_prescribed_steps(1, "ux", increments),
            monitor=monitor,
        )
    return BenchCase(
        case_id="column",
        frame=frame,
        quantity="critical",
        mode="compression",
        axial_stiffness=section["ea"],
        stability=params,
        analytical=analytical,
    )


def _tension(support: SupportType, case_id: str, model: BeamModel, h_over_L: float, gamma: float,
             segments: int, increment: float = STRAIN_INCREMENT) -> BenchCase:
    section = _section(model, h_over_L, gamma)
    params = StabilityParams.for_rectangular(gamma, 1.0, h_over_L, support)
    try:
        analytical = critical_tension_reissner(params) if model == BeamModel.REISSNER else None
    except NoBifurcationError:
        analytical = None
    # models without a tensile bifurcation are stretched to the Reissner value and beyond
    target = analytical if analytical is not None else gamma / (1.0 - gamma)
    increments = _schedule_to(target, increment)
    monitor = MonitorSpec(critical="eigenvalue", stop_on_critical=True)

    if support == SupportType.SIMPLY_SUPPORTED:
        nodes = [
            NodeSpec(id=1, x=0.0, z=0.0, ux=FIXED, uz=FIXED),
            NodeSpec(id=2, x=1.0, z=0.0, ux=PRESCRIBED, uz=FIXED),
        ]
        elements = [ElementSpec(id=1, nodes=(1, 2), model=model, segments=segments, **section)]
        driven = 2
    elif support == SupportType.CLAMPED_ONE_END:
        nodes = [
            NodeSpec(id=1, x=0.0, z=0.0, ux=FIXED, uz=FIXED, rot=FIXED),
            NodeSpec(id=2, x=1.0, z=0.0, ux=PRESCRIBED),
        ]
        elements = [ElementSpec(id=1, nodes=(1, 2), model=model, segments=segments, **section)]
        driven = 2
    else:
        nodes = [
            NodeSpec(id=1, x=0.0, z=0.0, ux=FIXED, uz=FIXED, rot=FIXED),
            NodeSpec(id=2, x=0.5, z=0.0),
            NodeSpec(id=3, x=1.0, z=0.0, ux=PRESCRIBED, uz=FIXED, rot=FIXED),
        ]
        elements = [
            ElementSpec(id=1, nodes=(1, 2), model=model, segments=segments, **section),
            ElementSpec(id=2, nodes=(2, 3), model=model, segments=segments, **section),
        ]
        driven = 3
    if model == BeamModel.EULER:
        # load control with a pull EA at the driven end, load factor equals P/EA
        nodes = [node.model_copy(update={"ux": DofKind.FREE}) if node.id == driven else node for node in nodes]
        frame = FrameModel(
            nodes=nodes,
            elements=elements,
            nodal_loads=[NodalLoad(node=driven, fx=section["ea"])],
            schedule=[LoadStep(load_factor=value) for value in increments],
            monitor=monitor,
        )
    else:
        frame = FrameModel(
            nodes=nodes,
            elements=elements,
            schedule=_prescribed_steps(driven, "ux", increments),
            monitor=monitor,
        )
    return BenchCase(
        case_id=case_id,
        frame=frame,
        quantity="critical",
        mode="tension",
        axial_stiffness=section["ea"],
        stability=params,
        analytical=analytical,
    )


def tension_ss(model: BeamModel, h_over_L: Optional[float], segments: int) -> BenchCase:
    return _tension(SupportType.SIMPLY_SUPPORTED, "tension-ss", model, h_over_L or 0.25, 1.0 / 3.0, segments)


def tension_one_clamped(model: BeamModel, h_over_L: Optional[float], segments: int) -> BenchCase:
    return _tension(SupportType.CLAMPED_ONE_END, "tension-one-clamped", model, h_over_L or 0.25, 1.0 / 3.0, segments)


def tension_clamped(model: BeamModel, h_over_L: Optional[float], segments: int) -> BenchCase:
    return _tension(SupportType.CLAMPED_BOTH, "tension-clamped", model, h_over_L or 1.0 / 6.0, 1.0 / 3.0, segments)


CASES: Dict[str, Callable[[BeamModel, Optional[float], int], BenchCase]] = {
    "ss-midforce": ss_midforce,
    "ss-stiffness": ss_stiffness,
    "clamped-uniform": clamped_uniform,
    "tip-force-shear": tip_force_shear,
    "tip-force-rigid": tip_force_rigid,
    "cantilever-moment": cantilever_moment,
    "dome": dome,
    "column": column,
    "tension-ss": tension_ss,
    "tension-one-clamped": tension_one_clamped,
    "tension-clamped": tension_clamped,
}

DEFAULT_SEGMENTS = {"cantilever-moment": 100, "dome": 100, "column": 32, "tension-one-clamped": 32}


def build_case(case_id: str, segments: Optional[int] = None) -> BenchCase:
    """Build a built-in benchmark, e.g. 'ss-midforce:ziegler:1/16' or 'tip-force-shear:reissner:200'."""
    name, model, parameter = parse_case_id(case_id)
    builder = CASES.get(name)
    if builder is None:
        raise BeamInputError(f"unknown case '{name}', expected one of {sorted(CASES)}")
    if segments is None:
        segments = DEFAULT_SEGMENTS.get(name, 16)
    case = builder(model or BeamModel.REISSNER, parameter, segments)
    logger.debug(f"Built case {case_id} with {segments} segments per element")
    return case.model_copy(update={"case_id": case_id})
