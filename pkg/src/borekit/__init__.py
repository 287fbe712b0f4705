"""Bayesian optimisation via density-ratio estimation.

Core pieces: probabilistic least-squares classification in an RKHS with
closed-form confidence bounds, greedy and confidence-bound acquisition
rules plus GP baselines, SVGD batch proposals, synthetic benchmark
generation, and a seeded experiment harness with regret and bound
accounting.
"""

from .acquisition import (
    GPRegressor,
    argmax_finite,
    bore_pp_select,
    bore_select,
    empty_gp,
    expected_improvement,
    fit_gp,
    gp_ei,
    gp_ei_select,
    gp_ucb_select,
)
from .benchmarks import (
    AnalyticObjective,
    CauchyNoise,
    GaussianNoise,
    StudentTNoise,
    SyntheticObjective,
    generate_synthetic,
    lipschitz_of_inverse_cdf,
    make_analytic,
)
from .classifier import (
    ClassifierPosterior,
    FeatureMapPosterior,
    empty_classifier,
    fit_classifier,
    fit_feature_map_classifier,
    sample_feature_map,
    sequential_information_gain,
)
from .driver import (
    ObjectiveConfig,
    RunConfig,
    RunResult,
    TrialRecord,
    distributional_regret,
    evaluate_bounds,
    run_batch,
    run_sequential,
    thm2_bound,
    thm3_bound,
)
from .errors import InvalidInputError, NumericalError
from .kernels import Kernel, eval_kernel, eval_kernel_grad, rkhs_norm_finite
from .labeling import binary_cross_entropy, empirical_cdf, labels, quantile
from .spaces import BoxSpace, FiniteSpace, SearchSpace
from .svgd import (
    LogDensityTarget,
    ParticleSet,
    SvgdConfig,
    median_bandwidth,
    propose_batch,
    run_svgd,
    svgd_step,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticObjective",
    "BoxSpace",
    "CauchyNoise",
    "ClassifierPosterior",
    "FeatureMapPosterior",
    "FiniteSpace",
    "GPRegressor",
    "GaussianNoise",
    "InvalidInputError",
    "Kernel",
    "LogDensityTarget",
    "NumericalError",
    "ObjectiveConfig",
    "ParticleSet",
    "RunConfig",
    "RunResult",
    "SearchSpace",
    "StudentTNoise",
    "SvgdConfig",
    "SyntheticObjective",
    "TrialRecord",
    "argmax_finite",
    "binary_cross_entropy",
    "bore_pp_select",
    "bore_select",
    "distributional_regret",
    "empirical_cdf",
    "empty_classifier",
    "empty_gp",
    "eval_kernel",
    "eval_kernel_grad",
    "evaluate_bounds",
    "expected_improvement",
    "fit_classifier",
    "fit_feature_map_classifier",
    "fit_gp",
    "generate_synthetic",
    "gp_ei",
    "gp_ei_select",
    "gp_ucb_select",
    "labels",
    "lipschitz_of_inverse_cdf",
    "make_analytic",
    "median_bandwidth",
    "propose_batch",
    "quantile",
    "rkhs_norm_finite",
    "run_batch",
    "run_sequential",
    "run_svgd",
    "sample_feature_map",
    "sequential_information_gain",
    "svgd_step",
    "thm2_bound",
    "thm3_bound",
]
