"""Verification laboratory for decomposable critical multitype Galton-Watson
processes: exact generating-function laws, closed-form asymptotic constants
and limit distributions, Monte Carlo simulation, and a convergence harness
tying them together."""

from .errors import (
    BranchLabError,
    ConditioningError,
    ConfigError,
    ConstantsError,
    DomainError,
    FeasibilityError,
    ModelError,
    SolverError,
)
from .model import (
    Bernoulli,
    Binomial,
    ComponentLaw,
    Deterministic,
    Geometric,
    ModelSpec,
    MomentSummary,
    OffspringLaw,
    Poisson,
    ValidationReport,
    model_from_toml,
    model_to_toml,
    moments,
    pgf,
    sample_offspring,
    single_type_geometric,
    survival_map,
    unit_model,
    validate_hypothesis_a,
)
from .pgf_engine import (
    ConditionalLawQuery,
    ConditionalLawValue,
    ExtinctionPmfTable,
    SurvivalSequence,
    conditional_laplace,
    extinction_pmf,
    mean_matrix_power,
    pgf_forward,
    second_moments,
    survival_sequence,
    yaglom_transform,
)
from .asymptotics import (
    AsymptoticConstants,
    PhiSolution,
    constants,
    constants_identity_violations,
    phi_closed_form_pair,
    phi_solution,
    phi_solve,
    phi_via_pgf_limit,
    theorem_rhs,
)
from .montecarlo import (
    BLOCK,
    ConditionalEnsemble,
    McConfig,
    ProgenyStats,
    TrajectorySample,
    conditional_ensemble,
    extinction_time_counts,
    simulate,
    snapshot_at,
    total_progeny,
    tree_export,
)
from .convergence import (
    ConvergenceTable,
    Perturbation,
    RecursionSpec,
    lemma_basic_checkpoints,
    lemma_basic_iterate,
    limit_estimate,
    regime_m,
    theorem_table,
)

__version__ = "0.1.0"
