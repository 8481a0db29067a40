"""Exception hierarchy. CLI exit codes are keyed off these classes."""


class LabError(Exception):
    exit_code = 1


class DomainError(LabError, ValueError):
    """Inputs outside the admissible parameter range."""

    exit_code = 2


class ResolutionError(LabError):
    """A grid or quadrature rule is too coarse for the oscillation scale."""

    exit_code = 3


class BudgetError(ResolutionError):
    """The node count demanded by the resolution rule exceeds the budget."""


class ConstructionError(LabError):
    """A harmonic-sum construction step violated its coefficient bounds."""

    exit_code = 4


class ConsistencyError(LabError):
    """Two independent routes to the same quantity disagree."""

    exit_code = 4


class VerificationError(LabError):
    exit_code = 4
