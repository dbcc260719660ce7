"""Sparse-penalized deep networks with the modified ReLU activation."""

from .bounds import (
    ApproxBudget,
    EntropyQuery,
    OracleCheckParams,
    ProblemSpec,
    approx_budget_report,
    architecture_for,
    concentration_condition_check,
    dudley_lhs,
    entropy_bound,
    envelope_Kn,
    oracle_condition_report,
    t_condition_threshold,
    theorem_tn,
    tuning_lambda,
)
from .bridge import (
    certify_sparse,
    embed_sparse_to_modified,
    extract_plain_from_modified,
    random_sparse_plain,
    verify_inclusion_chain,
)
from .datagen import NoiseModel, RegressionDataset, make_target, mc_l2_error, read_dataset, sample_dataset, write_dataset
from .harness import StudyConfig, load_config, run_rate_study, write_report
from .network import (
    MODIFIED,
    PLAIN,
    Architecture,
    NetworkParams,
    alpha,
    forward,
    l1_norm,
    l2sq_norm,
    load_model,
    nu,
    save_model,
)
from .training import PenaltySpec, TrainConfig, gradient_check, train

__version__ = "0.1.0"
