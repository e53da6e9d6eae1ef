"""Exception types raised across the package."""


class DeblogError(Exception):
    """Base class for all errors raised by deblog."""


class DegreeError(DeblogError, ValueError):
    """Form degree out of range for the requested operation."""


class ChartDomainError(DeblogError, ValueError):
    """Evaluation point or finite-difference stencil outside the chart."""


class SingularEvaluationError(DeblogError, ValueError):
    """Evaluation of a singular form on the critical hypersurface."""


class DegeneracyError(DeblogError, ArithmeticError):
    """A linear system that should be uniquely solvable is singular."""


class ParityMismatchError(DeblogError, ValueError):
    """Profile parity does not match the singularity order of the model."""


class ProfileError(DeblogError, ValueError):
    """A desingularizing profile violates its defining constraints."""


class ConditioningError(DeblogError, ValueError):
    """Least-squares basis too ill-conditioned to identify the coefficients."""


class UnsupportedError(DeblogError, NotImplementedError):
    """Operation needs closed-form data that the input does not provide."""


class SpecError(DeblogError, ValueError):
    """Malformed model-spec document."""
