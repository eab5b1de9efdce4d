"""Monte Carlo complexity estimation and closed-form capacity bounds for
rank- and spectral-norm-constrained networks."""

from .bounds import (
    BoundInputs,
    BoundReport,
    assemble_generalization_bound,
    bound_bartlett,
    bound_collapse,
    bound_deep_linear,
    bound_diameter,
    bound_golowich,
    bound_main_full,
    bound_main_simplified,
    bound_neyshabur,
    bound_r_term,
    bound_single_layer,
    build_report,
    crossover_root,
)
from .complexity import (
    ComplexityEstimate,
    EstimationFailure,
    OptimizerConfig,
    default_optimizer_config,
    estimate_diameter,
    estimate_gaussian_complexity,
    estimate_rademacher_complexity,
    norm_based_complexity_linear,
    single_layer_exact_sup,
)
from .data import TASKS, gen_synthetic
from .estimators import (
    GaussianComplexityEstimator,
    LowRankMLPClassifier,
    NetworkDiameterEstimator,
    NormBasedComplexityEstimator,
    RademacherComplexityEstimator,
)
from .experiments import ConfigError, RunResult, run_experiment
from .linalg import (
    ConstraintSet,
    PowerIterationFailure,
    SvdFactors,
    SvdFailure,
    frobenius_norm,
    ky_fan,
    l21_norm_of_transpose,
    numerical_rank,
    project_rank_spectral,
    spectral_norm,
    svd,
)
from .network import (
    Activation,
    DataSample,
    NetworkSpec,
    forward,
    load_network,
    network_from_json,
    network_to_json,
    random_weights,
    save_network,
)
from .training import (
    LOSS_LIPSCHITZ,
    TrainConfig,
    TrainingFailure,
    TrainResult,
    loss_values,
    mean_loss,
    train_projected_sgd,
)

__all__ = [
    "Activation",
    "BoundInputs",
    "BoundReport",
    "ComplexityEstimate",
    "ConfigError",
    "ConstraintSet",
    "DataSample",
    "EstimationFailure",
    "GaussianComplexityEstimator",
    "LOSS_LIPSCHITZ",
    "LowRankMLPClassifier",
    "NetworkDiameterEstimator",
    "NetworkSpec",
    "NormBasedComplexityEstimator",
    "OptimizerConfig",
    "PowerIterationFailure",
    "RademacherComplexityEstimator",
    "RunResult",
    "SvdFactors",
    "SvdFailure",
    "TASKS",
    "TrainConfig",
    "TrainResult",
    "TrainingFailure",
    "assemble_generalization_bound",
    "bound_bartlett",
    "bound_collapse",
    "bound_deep_linear",
    "bound_diameter",
    "bound_golowich",
    "bound_main_full",
    "bound_main_simplified",
    "bound_neyshabur",
    "bound_r_term",
    "bound_single_layer",
    "build_report",
    "crossover_root",
    "default_optimizer_config",
    "estimate_diameter",
    "estimate_gaussian_complexity",
    "estimate_rademacher_complexity",
    "forward",
    "frobenius_norm",
    "gen_synthetic",
    "ky_fan",
    "l21_norm_of_transpose",
    "load_network",
    "loss_values",
    "mean_loss",
    "network_from_json",
    "network_to_json",
    "norm_based_complexity_linear",
    "numerical_rank",
    "project_rank_spectral",
    "random_weights",
    "run_experiment",
    "save_network",
    "single_layer_exact_sup",
    "spectral_norm",
    "svd",
    "train_projected_sgd",
]

__version__ = "0.1.0"
