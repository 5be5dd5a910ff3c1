"""Exception hierarchy shared by every compiler stage."""


class EinError(Exception):
    """Base class for user-facing diagnostics (CLI exit code 1)."""

    stage = "compile"


class InternalError(EinError):
    """An invariant of the compiler itself was violated (CLI exit code 2)."""


# ein-ir well-formedness

class WellFormedError(EinError):
    stage = "ein-ir"


class UnboundIndex(WellFormedError):
    pass


class UnboundParam(WellFormedError):
    pass


class ShapeMismatch(WellFormedError):
    pass


class EpsilonDimMismatch(WellFormedError):
    pass


class ArityMismatch(WellFormedError):
    pass


# frontend

class FrontendError(EinError):
    stage = "frontend"

    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


class SyntaxError_(FrontendError):
    pass


class TypeError_(FrontendError):
    pass


class UnknownIdentifier(TypeError_):
    pass


class ContinuityExhausted(TypeError_):
    pass


class DimMismatch(TypeError_):
    pass


class SurfaceShapeMismatch(TypeError_):
    pass


# transforms / lowering

class FuelExhausted(InternalError):
    stage = "transform-high"


class UnsupportedShape(EinError):
    stage = "translate"


class NotNormalized(InternalError):
    stage = "lowering"


class ContinuityExceeded(EinError):
    stage = "lowering"


class BudgetExceeded(EinError):
    stage = "lowering"

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count


# runtime

class RuntimeFailure(EinError):
    stage = "runtime"


class DerivativeOrderExceeded(RuntimeFailure):
    pass


class OutOfDomain(RuntimeFailure):
    def __init__(self, message, position_index=None):
        super().__init__(message)
        self.position_index = position_index


class DivideByZero(RuntimeFailure):
    pass


class BindingError(RuntimeFailure):
    pass


class NrrdError(RuntimeFailure):
    stage = "nrrd"


class UnsupportedFeature(NrrdError):
    pass


class MalformedHeader(NrrdError):
    pass


class SizeMismatch(NrrdError):
    pass
