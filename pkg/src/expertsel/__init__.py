"""Binary feature pre-selection for two-class Naive Bayes from expert probability tables."""

from .kernels import BACKEND
from .model import (
    CapacityError,
    Cell,
    CellList,
    ClassPriors,
    ErrorBreakdown,
    Feature,
    FeatureProbabilityTable,
    InvalidInputError,
    NoImprovementRegion,
    RegionUndefinedError,
    build_list,
    class_supports,
    classify,
    error_of_subset,
    evaluate_error,
    expand_list,
    no_improvement_test,
    prior_error,
    prune_list,
    reduction_closed_form,
    reduction_surface,
    region_parallelogram,
    sensitivity_specificity,
)
from .sensitivity import (
    OverlapReport,
    PerturbationConfig,
    RankTable,
    compare_rank_tables,
    perturb_table,
    run_sensitivity,
)
from .selector import (
    BudgetError,
    Counterexample,
    SelectionStep,
    SelectionTrace,
    StoppingRule,
    exhaustive_best_subset,
    find_counterexample,
    rank_individual,
    select_among_nonimproving,
    sfs_select,
)

__version__ = "0.1.0"
