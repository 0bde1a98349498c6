"""Familywise error rates under equicorrelated and elliptical dependence.

Exact one-factor FWER integrals, analytic bounds and limit diagnostics,
step-down procedures, and reproducible Monte Carlo cross-validation.
"""

__version__ = "0.1.0"

from .distributions import (
    DistributionSpec,
    make_distribution,
    spec_from_json,
    standard_normal,
    laplace,
    scaled_student_t,
    standardized_pareto,
    generalized_normal,
)
from .errors import (
    ConfigurationError,
    DomainError,
    FwerkitError,
    NumericError,
    QuadratureError,
)
from .factor_model import (
    EquicorrelatedModel,
    MarginalLaw,
    NullConfiguration,
    model_from_json,
)
from .fwer_analytics import (
    BoundReport,
    ConditionReport,
    LimitDiagnostic,
    bound_report,
    check_zero_limit_conditions,
    exact_any_rejection_holm,
    exact_fwer_bonferroni,
    anypwr_single_step,
    fwer_lower_bound,
    fwer_upper_bound,
    limit_ratio_diagnostic,
    pareto_limit_floor,
    quadrant_probability,
    reduction_bound,
)
from .procedures import (
    BONFERRONI,
    HOLM,
    CutoffVector,
    GordonCheck,
    RejectionAccount,
    StepDownProcedure,
    account,
    bonferroni_cutoffs,
    compute_pvalues,
    holm_cutoffs,
    run_step_down,
    single_step_bonferroni,
    validate_gordon,
)
from .simulation import (
    EllipticalT,
    FwerEstimate,
    GaussianGeneral,
    OneFactor,
    SimulationConfig,
    estimate_anypwr,
    estimate_fwer,
    estimate_prob_any_rejection,
)

__all__ = [name for name in dir() if not name.startswith("_")]
