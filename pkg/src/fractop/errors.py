"""Exception hierarchy. Every error carries the CLI exit code it maps to."""


class FractopError(Exception):
    exit_code = 3

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InputError(FractopError):
    """Malformed file or flag (exit 1)."""
    exit_code = 1


class ValidationError(FractopError):
    """Input is well formed but violates a mathematical precondition (exit 2)."""
    exit_code = 2


class InconsistencyError(FractopError):
    """A computed object fails its own certificate (exit 3)."""
    exit_code = 3


class InvalidWord(ValidationError):
    pass


class NotPcf(ValidationError):
    pass


class RewriteOverflow(ValidationError):
    pass


class SicViolation(ValidationError):
    pass


class MissingIdentification(ValidationError):
    pass


class SamePoint(ValidationError):
    pass


class SamePointOrTouching(ValidationError):
    pass


class ComparabilityFailure(InconsistencyError):
    pass


class DomainError(ValidationError):
    pass


class GeometryMismatch(InconsistencyError):
    pass


class DecompositionError(ValidationError):
    pass


class NotDendrite(ValidationError):
    pass


class SystemExtractionFailure(InconsistencyError):
    pass


class AssignmentInfeasible(ValidationError):
    pass


class NotAGasket(ValidationError):
    pass


class CornerMapMissing(ValidationError):
    pass


class SBoundViolation(ValidationError):
    pass


class TriangleIdError(ValidationError):
    pass


class GoodAssignmentFailure(InconsistencyError):
    pass
