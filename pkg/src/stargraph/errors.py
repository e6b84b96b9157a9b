"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`StarGraphError`. Most also derive from the closest builtin so that
callers that only care about ``ValueError`` keep working.
"""


class StarGraphError(Exception):
    """Base class for all library errors."""


class InvalidParameter(StarGraphError, ValueError):
    pass


class GraphMismatch(StarGraphError, ValueError):
    pass


class ShapeMismatch(GraphMismatch):
    pass


class InvalidExponent(StarGraphError, ValueError):
    pass


class UnknownPreset(StarGraphError, KeyError):
    pass


class RankDeficient(StarGraphError, ValueError):
    """The block matrix ``(A B)`` does not have full row rank."""

    def __init__(self, message, singular_values=None):
        super().__init__(message)
        self.singular_values = singular_values


class NonSelfAdjoint(StarGraphError, ValueError):
    """``A B^*`` is not Hermitian."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class InvalidAlpha(StarGraphError, ValueError):
    pass


class SingularMatrix(StarGraphError, ArithmeticError):
    pass


class InvalidSpectralParameter(StarGraphError, ValueError):
    pass


class DomainEscape(StarGraphError, ValueError):
    """A rescaled argument left the truncated computational domain."""


class NonpositiveTime(StarGraphError, ValueError):
    pass


class IllPosedVertexElimination(StarGraphError, ArithmeticError):
    pass


class NonHermitianDiscretization(StarGraphError, ArithmeticError):
    pass


class BackendMismatch(StarGraphError, ValueError):
    pass


class EscapeGuardViolation(StarGraphError, RuntimeError):
    """Mass reached the far wall; ``trajectory`` holds the partial run."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NaNDetected(StarGraphError, FloatingPointError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class TestFunctionViolatesBoundary(StarGraphError, ValueError):
    __test__ = False  # keep pytest from collecting this


class MissingSnapshot(StarGraphError, KeyError):
    pass


class ZeroInput(StarGraphError, ValueError):
    pass


class SignConstructionFailed(StarGraphError, RuntimeError):
    pass


class InsufficientHorizon(StarGraphError, ValueError):
    pass


class ConfigError(StarGraphError):
    """Base for configuration problems; carries a list of messages."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ParseError(ConfigError):
    pass


class SchemaViolation(ConfigError):
    pass


class PhysicalInconsistency(ConfigError):
    pass
