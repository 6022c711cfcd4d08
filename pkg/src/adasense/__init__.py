"""Budgeted adaptive sensing of sparse signals in Gaussian noise.

Strategies and estimators, Monte Carlo risk evaluation, closed-form
critical-amplitude calculators, and brute-force verifiers of the
allocation and distribution identities the whole construction rests on.
"""

from ._version import __version__

from .bounds import (
    BoundSpec,
    cs_lower_bound,
    detection_lower_bound,
    estimation_lower_bound,
    estimation_upper_bound,
    mds_sufficient_magnitude,
)
from .core import (
    BudgetLedger,
    SensingRecord,
    SensingTrace,
    SparseSignal,
    SupportClass,
    class_is_full_range,
    class_is_symmetric,
    empirical_kl_under_null,
    log_likelihood_ratio,
    observe,
)
from .errors import (
    AdasenseError,
    BudgetExceeded,
    ClassTooLarge,
    EmptyCurve,
    InvalidAction,
    InvalidDimension,
    InvalidEpsilon,
    InvalidSparsity,
    OutOfSupport,
)
from .harness import (
    ExperimentConfig,
    PhaseDiagram,
    RiskCurve,
    ScanResult,
    phase_diagram,
    run_experiment,
    threshold_scan,
)
from .metrics import (
    DetectionRiskTriple,
    EstimationErrorReport,
    detection_risk,
    estimation_risk,
    fdr,
    ndr,
    sym_diff_error,
)
from .oracles import (
    BudgetAllocation,
    KlCapReport,
    average_allocation_value,
    hypergeometric_pmf,
    kl_cap_check,
    maxmin_allocation_value,
    truncated_geometric_pmf,
)
from .strategies import (
    DetectOutcome,
    DsParams,
    EstimateOutcome,
    SdsParams,
    SprtParams,
    distilled_sensing,
    make_strategy,
    mds_detect,
    non_adaptive_uniform_estimate,
    parallel_sprt_estimate,
    simple_distilled_sensing,
    symmetrize,
)
