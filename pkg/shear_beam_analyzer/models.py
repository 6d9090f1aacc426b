import math
from enum import Enum
from typing import Optional, List, Dict, Any, Callable, Union, Tuple, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import EULER_AXIAL_PENALTY


class BeamModel(str, Enum):
    REISSNER = "reissner"
    ZIEGLER = "ziegler"
    KIRCHHOFF = "kirchhoff"
    EULER = "euler"


class CompressionModel(str, Enum):
    EULER = "euler"
    KIRCHHOFF = "kirchhoff"
    REISSNER = "reissner"
    ZIEGLER = "ziegler"
    ENGESSER = "engesser"


class SupportType(str, Enum):
    CLAMPED_ONE_END = "clamped-one-end"
    SIMPLY_SUPPORTED = "simply-supported"
    CLAMPED_BOTH = "clamped-both"


class TimoshenkoCase(str, Enum):
    MIDSPAN_FORCE = "midspan-force"
    CLAMPED_UNIFORM = "clamped-uniform"


class DofKind(str, Enum):
    FREE = "free"
    FIXED = "fixed"
    PRESCRIBED = "prescribed"


DofName = Literal["ux", "uz", "rot"]
DOF_NAMES: Tuple[str, str, str] = ("ux", "uz", "rot")


def _require_finite(value: float, name: str) -> float:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


# --- Sections ---

class SectionCompliances(BaseModel):
    """Axial, shear and bending compliances of one integration segment.

    All zeros encode a rigid segment; c_shear = 0 alone is the Kirchhoff limit,
    c_axial = c_shear = 0 with c_bend > 0 the Euler elastica.
    """
    model_config = ConfigDict(frozen=True)

    c_axial: float = 0.0
    c_shear: float = 0.0
    c_bend: float = 0.0

    @field_validator("c_axial", "c_shear", "c_bend")
    @classmethod
    def check_non_negative(cls, value: float, info):
        _require_finite(value, info.field_name)
        if value < 0.0:
            raise ValueError(f"{info.field_name} must be >= 0, got {value}")
        return value

    @property
    def is_rigid(self) -> bool:
        return self.c_axial == 0.0 and self.c_shear == 0.0 and self.c_bend == 0.0

    @classmethod
    def from_stiffness(cls, ea: float, gas: float, ei: float) -> "SectionCompliances":
        """Infinite stiffness maps to zero compliance."""
        def inverse(k: float, name: str) -> float:
            if k <= 0.0:
                raise ValueError(f"{name} must be positive, got {k}")
            return 0.0 if math.isinf(k) else 1.0 / k
        return cls(c_axial=inverse(ea, "EA"), c_shear=inverse(gas, "GA_s"), c_bend=inverse(ei, "EI"))


class SectionProperties(BaseModel):
    model_config = ConfigDict(frozen=True)

    ea: float
    gas: float
    ei: float

    @field_validator("ea", "gas", "ei")
    @classmethod
    def check_positive(cls, value: float, info):
        if not value > 0.0:
            raise ValueError(f"{info.field_name} must be positive, got {value}")
        return value

    @property
    def gamma(self) -> float:
        return self.gas / self.ea

    @classmethod
    def rectangular(cls, e: float, nu: float, b: float, h: float, shear_factor: float = 5.0 / 6.0) -> "SectionProperties":
        g = e / (2.0 * (1.0 + nu))
        area = b * h
        return cls(ea=e * area, gas=g * shear_factor * area, ei=e * b * h ** 3 / 12.0)

    @classmethod
    def from_ratio(cls, ei: float, depth: float, gamma: float = 1.0 / 3.0) -> "SectionProperties":
        """Rectangular section described by EI, its depth h and Γ = GA_s/EA (EA = 12 EI / h²)."""
        ea = 12.0 * ei / depth ** 2
        return cls(ea=ea, gas=gamma * ea, ei=ei)

    def compliances(self, model: BeamModel, length: float) -> SectionCompliances:
        base = SectionCompliances.from_stiffness(self.ea, self.gas, self.ei)
        return compliances_for_model(base, model, length)


def compliances_for_model(base: SectionCompliances, model: BeamModel, length: float) -> SectionCompliances:
    """Apply the degenerations implied by a model selector."""
    model = BeamModel(model)
    if model == BeamModel.KIRCHHOFF:
        return base.model_copy(update={"c_shear": 0.0})
    if model == BeamModel.EULER:
        return SectionCompliances(
            c_axial=EULER_AXIAL_PENALTY * length ** 2 * base.c_bend,
            c_shear=0.0,
            c_bend=base.c_bend,
        )
    return base


# --- Element geometry ---

class BeamElement(BaseModel):
    model_config = ConfigDict(frozen=True)

    length: float
    initial_inclination: float = 0.0
    segments: int
    compliances: Union[SectionCompliances, List[SectionCompliances]]
    rigid_offset_left: float = 0.0
    rigid_offset_right: float = 0.0

    @model_validator(mode="after")
    def check_geometry(self):
        if not (math.isfinite(self.length) and self.length > 0.0):
            raise ValueError(f"length must be positive, got {self.length}")
        if self.segments < 1:
            raise ValueError(f"segments must be >= 1, got {self.segments}")
        if self.rigid_offset_left < 0.0 or self.rigid_offset_right < 0.0:
            raise ValueError("rigid offsets must be >= 0")
        if self.rigid_offset_left + self.rigid_offset_right >= self.length:
            raise ValueError(
                f"rigid offsets {self.rigid_offset_left} + {self.rigid_offset_right} leave no flexible part of L={self.length}"
            )
        if isinstance(self.compliances, list) and len(self.compliances) != self.segments:
            raise ValueError(f"expected {self.segments} compliance records, got {len(self.compliances)}")
        return self

    @property
    def flexible_length(self) -> float:
        return self.length - self.rigid_offset_left - self.rigid_offset_right

    @property
    def segment_length(self) -> float:
        return self.flexible_length / self.segments

    def grid_points(self) -> np.ndarray:
        """Flexible grid stations ξ_i, i = 0..N, in element coordinates."""
        return self.rigid_offset_left + self.segment_length * np.arange(self.segments + 1)

    def midpoints(self) -> np.ndarray:
        return self.rigid_offset_left + self.segment_length * (np.arange(self.segments) + 0.5)

    def compliance_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if isinstance(self.compliances, list):
            records = self.compliances
            return (
                np.array([c.c_axial for c in records]),
                np.array([c.c_shear for c in records]),
                np.array([c.c_bend for c in records]),
            )
        n = self.segments
        c = self.compliances
        return np.full(n, c.c_axial), np.full(n, c.c_shear), np.full(n, c.c_bend)


class GeneralizedCoordinates(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float = 0.0
    z: float = 0.0
    phi: float = 0.0

    @field_validator("x", "z", "phi")
    @classmethod
    def check_finite(cls, value: float, info):
        return _require_finite(value, info.field_name)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.z, self.phi])

    @classmethod
    def from_array(cls, values) -> "GeneralizedCoordinates":
        return cls(x=float(values[0]), z=float(values[1]), phi=float(values[2]))


class GeneralizedForces(BaseModel):
    model_config = ConfigDict(frozen=True)

    fx: float = 0.0
    fz: float = 0.0
    m: float = 0.0

    @field_validator("fx", "fz", "m")
    @classmethod
    def check_finite(cls, value: float, info):
        return _require_finite(value, info.field_name)

    def as_array(self) -> np.ndarray:
        return np.array([self.fx, self.fz, self.m])

    @classmethod
    def from_array(cls, values) -> "GeneralizedForces":
        return cls(fx=float(values[0]), fz=float(values[1]), m=float(values[2]))


# --- Member loads ---

LoadDensity = Union[float, List[Tuple[float, float]], Callable[[float], float]]


class ConcentratedForce(BaseModel):
    model_config = ConfigDict(frozen=True)

    position: float
    fx: float = 0.0
    fz: float = 0.0


class DistributedLoad(BaseModel):
    """Global load densities along ξ ∈ [0, L] and a load factor.

    Each density is a constant, a table of (ξ, value) pairs interpolated
    linearly, or a callable of ξ.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    px: LoadDensity = 0.0
    pz: LoadDensity = 0.0
    m: LoadDensity = 0.0
    point_forces: List[ConcentratedForce] = Field(default_factory=list)
    scale: float = 1.0

    @property
    def is_zero(self) -> bool:
        densities_zero = all(isinstance(d, (int, float)) and d == 0.0 for d in (self.px, self.pz, self.m))
        return densities_zero and not self.point_forces

    def with_scale(self, scale: float) -> "DistributedLoad":
        return self.model_copy(update={"scale": scale})


class ArmLoad(BaseModel):
    """Partial resultants and moment density at the midpoint of a rigid arm."""
    model_config = ConfigDict(frozen=True)

    length: float
    px: float = 0.0
    pz: float = 0.0
    m: float = 0.0


class PartialResultants(BaseModel):
    """Accumulated load integrals P_x, P_z at the flexible midpoints and at ξ = L.

    Values are stored for the reference load and multiplied by the load
    factor on retrieval via `scaled`.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    px_half: np.ndarray
    pz_half: np.ndarray
    m_half: np.ndarray
    px_end: float = 0.0
    pz_end: float = 0.0
    left_arm: Optional[ArmLoad] = None
    right_arm: Optional[ArmLoad] = None
    has_load: bool = False

    def scaled(self, factor: float) -> "PartialResultants":
        if factor == 1.0:
            return self

        def arm(a: Optional[ArmLoad]) -> Optional[ArmLoad]:
            if a is None:
                return None
            return ArmLoad(length=a.length, px=a.px * factor, pz=a.pz * factor, m=a.m * factor)

        return PartialResultants(
            px_half=self.px_half * factor,
            pz_half=self.pz_half * factor,
            m_half=self.m_half * factor,
            px_end=self.px_end * factor,
            pz_end=self.pz_end * factor,
            left_arm=arm(self.left_arm),
            right_arm=arm(self.right_arm),
            has_load=self.has_load and factor != 0.0,
        )


# --- Sweep records ---

class ReissnerMidpointState(BaseModel):
    phi_mid: float
    n: float
    q: float
    eps: float
    gamma: float


class ZieglerMidpointState(BaseModel):
    phi_mid: float
    chi: float
    n_tilde: float
    q_star: float
    lam: float


class SweepRecord(BaseModel):
    """Per-grid state of one forward integration over the flexible part.

    `axial`, `shear` hold N, Q (Reissner) or Ñ, Q* (Ziegler); `strain` holds ε
    or ε_s; `shear_strain` holds γ or χ. `cos_mid`, `sin_mid` are the
    trigonometric values used for the coordinate increments.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    formulation: BeamModel
    f_a: GeneralizedForces
    r_a: GeneralizedCoordinates
    segment_length: float
    coords: np.ndarray
    phi_grid: np.ndarray
    phi_mid: np.ndarray
    moment: np.ndarray
    load_moment: np.ndarray
    axial: np.ndarray
    shear: np.ndarray
    strain: np.ndarray
    shear_strain: np.ndarray
    cos_mid: np.ndarray
    sin_mid: np.ndarray
    r_b: GeneralizedCoordinates
    mp_end: float

    @property
    def segments(self) -> int:
        return len(self.phi_mid)

    @property
    def phi_end(self) -> float:
        return float(self.phi_grid[-1])

    def midstate(self, index: int) -> Union[ReissnerMidpointState, ZieglerMidpointState]:
        """State at midpoint i - 1/2 for 1 <= i <= N."""
        if not 1 <= index <= self.segments:
            raise IndexError(f"midpoint index {index} outside 1..{self.segments}")
        k = index - 1
        if self.formulation == BeamModel.ZIEGLER:
            return ZieglerMidpointState(
                phi_mid=float(self.phi_mid[k]),
                chi=float(self.shear_strain[k]),
                n_tilde=float(self.axial[k]),
                q_star=float(self.shear[k]),
                lam=1.0 + float(self.strain[k]),
            )
        return ReissnerMidpointState(
            phi_mid=float(self.phi_mid[k]),
            n=float(self.axial[k]),
            q=float(self.shear[k]),
            eps=float(self.strain[k]),
            gamma=float(self.shear_strain[k]),
        )


class ElementState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: BeamModel
    f_a: GeneralizedForces
    f_b: GeneralizedForces
    r_a: GeneralizedCoordinates
    r_b: GeneralizedCoordinates
    record: SweepRecord
    jacobi: np.ndarray
    phi_a_column: np.ndarray
    mp_sensitivities: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    has_member_load: bool = False
    element_id: Optional[int] = None


class ElementTangent(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    k: np.ndarray


class ShapePoint(BaseModel):
    xi: float
    x: float
    z: float
    phi: float
    axial: float
    shear: float
    moment: float


# --- Closed-form parameters ---

class StabilityParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: float
    slenderness: float
    support: SupportType = SupportType.CLAMPED_BOTH

    @field_validator("gamma", "slenderness")
    @classmethod
    def check_positive(cls, value: float, info):
        if not value > 0.0:
            raise ValueError(f"{info.field_name} must be positive, got {value}")
        return value

    @staticmethod
    def buckling_length(length: float, support: SupportType) -> float:
        factors = {
            SupportType.CLAMPED_ONE_END: 2.0,
            SupportType.SIMPLY_SUPPORTED: 1.0,
            SupportType.CLAMPED_BOTH: 0.5,
        }
        return factors[SupportType(support)] * length

    @classmethod
    def for_rectangular(cls, gamma: float, length: float, depth: float, support: SupportType) -> "StabilityParams":
        radius = depth / math.sqrt(12.0)
        return cls(gamma=gamma, slenderness=cls.buckling_length(length, support) / radius, support=support)


class CantileverMomentParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu: float

    @field_validator("mu")
    @classmethod
    def check_non_negative(cls, value: float):
        if not value >= 0.0:
            raise ValueError(f"mu must be >= 0, got {value}")
        return value

    @classmethod
    def from_load(cls, m: float, ei: float, length: float) -> "CantileverMomentParams":
        return cls(mu=length * math.sqrt(m / (math.pi * ei)))


class PostCriticalTension(BaseModel):
    force_ratio: float
    length_ratio: float
    elongation_check: float


# --- Frame model (also the JSON model file schema) ---

class NodeSpec(BaseModel):
    id: int
    x: float
    z: float
    ux: DofKind = DofKind.FREE
    uz: DofKind = DofKind.FREE
    rot: DofKind = DofKind.FREE

    def kind(self, dof: str) -> DofKind:
        return getattr(self, dof)


class ElementSpec(BaseModel):
    id: int
    nodes: Tuple[int, int]
    model: BeamModel = BeamModel.REISSNER
    segments: int = 16
    ea: Optional[float] = None
    gas: Optional[float] = None
    ei: Optional[float] = None
    compliances: Optional[SectionCompliances] = None
    rigid_offset_left: float = 0.0
    rigid_offset_right: float = 0.0
    load: Optional[DistributedLoad] = None

    @model_validator(mode="after")
    def check_section(self):
        stiffness_given = all(v is not None for v in (self.ea, self.gas, self.ei))
        if not stiffness_given and self.compliances is None:
            raise ValueError(f"element {self.id}: give ea/gas/ei or compliances")
        if self.segments < 1:
            raise ValueError(f"element {self.id}: segments must be >= 1")
        if self.nodes[0] == self.nodes[1]:
            raise ValueError(f"element {self.id}: both ends on node {self.nodes[0]}")
        return self

    def base_compliances(self) -> SectionCompliances:
        if self.compliances is not None:
            return self.compliances
        return SectionCompliances.from_stiffness(self.ea, self.gas, self.ei)


class NodalLoad(BaseModel):
    node: int
    fx: float = 0.0
    fz: float = 0.0
    m: float = 0.0


class DofRef(BaseModel):
    model_config = ConfigDict(frozen=True)

    node: int
    dof: DofName

    @property
    def label(self) -> str:
        return f"{self.dof}_{self.node}"


class PrescribedIncrement(BaseModel):
    node: int
    dof: DofName
    value: float


class LoadStep(BaseModel):
    load_factor: float = 0.0
    prescribed: List[PrescribedIncrement] = Field(default_factory=list)
    repeat: int = 1

    @field_validator("repeat")
    @classmethod
    def check_repeat(cls, value: int):
        if value < 1:
            raise ValueError(f"repeat must be >= 1, got {value}")
        return value


class MonitorSpec(BaseModel):
    dofs: List[DofRef] = Field(default_factory=list)
    critical: Literal["eigenvalue", "diagonal", "none"] = "eigenvalue"
    diagonal: Optional[DofRef] = None
    stop_on_critical: bool = False

    @model_validator(mode="after")
    def check_diagonal(self):
        if self.critical == "diagonal" and self.diagonal is None:
            raise ValueError("diagonal monitor needs a 'diagonal' DOF reference")
        return self


class FrameModel(BaseModel):
    nodes: List[NodeSpec]
    elements: List[ElementSpec]
    nodal_loads: List[NodalLoad] = Field(default_factory=list)
    schedule: List[LoadStep]
    monitor: MonitorSpec = Field(default_factory=MonitorSpec)

    @model_validator(mode="after")
    def check_references(self):
        node_ids = [n.id for n in self.nodes]
        if len(set(node_ids)) != len(node_ids):
            raise ValueError("node ids must be unique")
        element_ids = [e.id for e in self.elements]
        if len(set(element_ids)) != len(element_ids):
            raise ValueError("element ids must be unique")
        known = set(node_ids)
        for element in self.elements:
            for node in element.nodes:
                if node not in known:
                    raise ValueError(f"element {element.id} references unknown node {node}")
        for load in self.nodal_loads:
            if load.node not in known:
                raise ValueError(f"nodal load references unknown node {load.node}")
        if not self.schedule:
            raise ValueError("schedule must contain at least one step")
        nodes = {n.id: n for n in self.nodes}
        constrained = any(n.kind(d) != DofKind.FREE for n in self.nodes for d in DOF_NAMES)
        if not constrained:
            raise ValueError("at least one DOF must be constrained")
        for index, step in enumerate(self.schedule):
            for inc in step.prescribed:
                if inc.node not in known:
                    raise ValueError(f"step {index}: unknown node {inc.node}")
                if nodes[inc.node].kind(inc.dof) != DofKind.PRESCRIBED:
                    raise ValueError(f"step {index}: {inc.dof} of node {inc.node} is not prescribed")
        for ref in self.monitor.dofs + ([self.monitor.diagonal] if self.monitor.diagonal else []):
            if ref.node not in known:
                raise ValueError(f"monitor references unknown node {ref.node}")
        return self

    def expanded_schedule(self) -> List[LoadStep]:
        steps: List[LoadStep] = []
        for step in self.schedule:
            single = step.model_copy(update={"repeat": 1})
            steps.extend([single] * step.repeat)
        return steps


# --- Frame results ---

class StepRecord(BaseModel):
    step: int
    load_factor: float
    control: float
    dof_values: List[float]
    monitored: Dict[str, float] = Field(default_factory=dict)
    lowest_eigenvalue: Optional[float] = None
    diagonal: Optional[float] = None
    reactions: Dict[str, float] = Field(default_factory=dict)
    end_forces: List[List[float]] = Field(default_factory=list)
    iterations: int = 0


class FrameState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    displacements: np.ndarray
    dof_values: np.ndarray
    element_states: List[ElementState] = Field(default_factory=list)
    load_factor: float = 0.0
    step_index: int = 0
    tangent: Optional[np.ndarray] = None
    lowest_eigenvalue: Optional[float] = None
    lowest_mode: Optional[np.ndarray] = None
    control: float = 0.0
    prescribed_totals: Dict[str, float] = Field(default_factory=dict)
    reactions: Dict[str, float] = Field(default_factory=dict)
    history: List[StepRecord] = Field(default_factory=list)


class CriticalState(BaseModel):
    value: float
    step: int
    before: float
    after: float


# --- Bench results ---

class ConvergenceRow(BaseModel):
    segments: int
    value: float
    relative_error: Optional[float] = None
    observed_order: Optional[float] = None


class BucklingReport(BaseModel):
    mode: Literal["compression", "tension"]
    numerical: Optional[float] = None
    analytical: Optional[float] = None
    relative_deviation: Optional[float] = None
    critical: bool = False
    error: Optional[str] = None
    status: Literal["ok", "validation", "solver"] = "ok"


class CommandResult(BaseModel):
    rows: List[Dict[str, Any]] = Field(default_factory=list)
    columns: List[str] = Field(default_factory=list)
    path: Optional[str] = None
    error: Optional[str] = None
    status: Literal["ok", "validation", "solver"] = "ok"
