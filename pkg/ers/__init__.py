"""Ensemble rejection sampling for static targets and state-space models."""

from .config import ExperimentConfig, load_config
from .dynamic import (
    AcceptanceEstimate,
    SampleOutcome,
    TheoryBounds,
    TrialRecord,
    crude_lower_bound,
    ensemble_size,
    ers_sample,
    ers_trial,
    estimate_acceptance,
    factorized_limit,
    factorized_lower_bound,
    factorized_rs_acceptance,
    run_ensemble_trial,
    standard_rs_trial,
    theory_bounds,
    theory_limit,
)
from .ensemble_hmm import (
    BoundResult,
    EnsembleGrid,
    ForwardFilterResult,
    ProposalDraw,
    acceptance_log_ratio,
    backward_sample,
    bounding_recursion,
    forward_filter,
    sample_grid,
)
from .errors import BoundUnavailable, BoundViolation, ConfigError, ContractViolation, DataError, ERSError
from .experiment import (
    ExperimentRunner,
    create_experiment_runner,
    emit_samples,
    results_frame,
    run_experiment,
    samples_frame,
)
from .model import FeynmanKacModel, StaticTarget, WeightCounter, evaluate_path_weight
from .rng import RngStream
from .static import (
    estimate_static_acceptance,
    ers_lower_bound,
    independent_rs_acceptance,
    static_ers_sample,
    static_ers_trial,
    static_rs_sample,
    two_point_target,
)

__all__ = [
    "AcceptanceEstimate",
    "BoundResult",
    "BoundUnavailable",
    "BoundViolation",
    "ConfigError",
    "ContractViolation",
    "DataError",
    "ERSError",
    "EnsembleGrid",
    "ExperimentConfig",
    "ExperimentRunner",
    "FeynmanKacModel",
    "ForwardFilterResult",
    "ProposalDraw",
    "RngStream",
    "SampleOutcome",
    "StaticTarget",
    "TheoryBounds",
    "TrialRecord",
    "WeightCounter",
    "acceptance_log_ratio",
    "backward_sample",
    "bounding_recursion",
    "create_experiment_runner",
    "crude_lower_bound",
    "emit_samples",
    "ensemble_size",
    "ers_lower_bound",
    "ers_sample",
    "ers_trial",
    "estimate_acceptance",
    "estimate_static_acceptance",
    "evaluate_path_weight",
    "factorized_limit",
    "factorized_lower_bound",
    "factorized_rs_acceptance",
    "forward_filter",
    "independent_rs_acceptance",
    "load_config",
    "results_frame",
    "run_ensemble_trial",
    "run_experiment",
    "sample_grid",
    "samples_frame",
    "standard_rs_trial",
    "static_ers_sample",
    "static_ers_trial",
    "static_rs_sample",
    "theory_bounds",
    "theory_limit",
    "two_point_target",
]
