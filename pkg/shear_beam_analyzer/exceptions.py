from typing import List, Optional, Sequence


class BeamInputError(ValueError):
    """Invalid input: bad parameters, load sampling failures, indices out of range."""


class ContractViolationError(ValueError):
    """An operation was called with inputs that break its precondition."""


class SingularMatrixError(ArithmeticError):
    """A dense solve met a pivot below the singularity threshold."""

    def __init__(self, message: str, pivot: float = 0.0):
        super().__init__(message)
        self.pivot = pivot


class SingularLinearizationError(ArithmeticError):
    """The Ziegler shear-angle derivative vanished at a midpoint."""

    def __init__(self, message: str, segment: int, denominator: float):
        super().__init__(message)
        self.segment = segment
        self.denominator = denominator


class ElementBifurcationError(ArithmeticError):
    """The element Jacobi matrix became singular during shooting."""

    def __init__(self, message: str, element_id: Optional[int] = None):
        super().__init__(message)
        self.element_id = element_id


class NumericalConvergenceError(RuntimeError):
    """An iteration hit its cap. Carries the last iterate and the residual history."""

    def __init__(self, message: str, last_iterate=None, residuals: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residuals: List[float] = list(residuals or [])


class ShearAngleConvergenceError(NumericalConvergenceError):
    pass


class ShootingConvergenceError(NumericalConvergenceError):
    pass


class StepConvergenceError(NumericalConvergenceError):
    def __init__(self, message: str, step_index: int, last_iterate=None, residuals=None):
        super().__init__(message, last_iterate=last_iterate, residuals=residuals)
        self.step_index = step_index


class BranchSwitchError(NumericalConvergenceError):
    pass


class NoBifurcationError(ValueError):
    """The requested closed-form critical state does not exist."""


class NotCriticalError(ValueError):
    """The monitored quantity never changed sign."""
