"""Exception hierarchy shared across the package."""


class BranchLabError(Exception):
    """Base class for all package errors."""


class ModelError(BranchLabError):
    """Structurally invalid model specification (missing law, bad parameter)."""


class DomainError(BranchLabError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(BranchLabError):
    """Malformed or strictly-rejected configuration input."""


class ConstantsError(BranchLabError):
    """Asymptotic constants are undefined for the supplied moments."""


class SolverError(BranchLabError):
    """The ODE integrator failed (step-size collapse or non-convergence)."""


class ConditioningError(BranchLabError):
    """Conditioning event too rare at this precision (denominator underflow)."""


class FeasibilityError(BranchLabError):
    """A Monte Carlo request is infeasible within the configured budget."""
