"""Exception hierarchy shared by every stage of the pipeline."""


class TomoError(Exception):
    """Base class; the CLI turns any subclass into a JSON error record."""


class SpecfunDomainError(TomoError, ValueError):
    pass


class InvalidCurveError(TomoError, ValueError):
    pass


class SingularityError(TomoError, ValueError):
    pass


class ResonanceError(TomoError, RuntimeError):
    """Boundary system too ill-conditioned (near an interior resonance)."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class OutOfBranchError(TomoError, ValueError):
    def __init__(self, message: str, attainable: float):
        super().__init__(message)
        self.attainable = attainable


class LineSearchError(TomoError, RuntimeError):
    pass


class DivergenceError(TomoError, RuntimeError):
    pass


class JacobianError(TomoError, RuntimeError):
    def __init__(self, message: str, column: int):
        super().__init__(message)
        self.column = column


class IsomorphismError(TomoError, RuntimeError):
    def __init__(self, message: str, harmonic: int, sigma_min: float):
        super().__init__(message)
        self.harmonic = harmonic
        self.sigma_min = sigma_min


class HypothesisError(TomoError, ValueError):
    pass


class NormalEquationError(TomoError, RuntimeError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class SlepianDivergenceError(TomoError, ValueError):
    pass


class ScenarioError(TomoError, ValueError):
    pass


class StagnationWarning(UserWarning):
    """Raised through warnings/logging only; the best iterate is still returned."""
