from ._baseline import BaselineResult, LeastSquaresARX, ls_arx_baseline
from ._diagnostics import (
    effective_sample_size,
    energy_bfmi,
    mcse_mean,
    parameter_diagnostics,
    split_rhat,
    summarize,
)
from ._grad import (
    LogPosterior,
    finite_difference,
    finite_difference_gradient,
    grad_log_posterior,
)
from ._inference import (
    HpdRegion,
    OneStepPrediction,
    PredictiveDensity,
    active_components,
    coefficient_summaries,
    component_summaries,
    default_grid,
    density_modes,
    gaussian_noise_reference,
    hpd_region,
    hyperparameter_summaries,
    model_fit,
    noise_density_estimate,
    noise_grid,
    one_step_ahead,
    predictive_density,
)
from ._model import (
    ModelConfig,
    ParameterVector,
    RegressionDataset,
    build_regression,
    gmm_log_density,
    initialize,
    inverse_transform,
    log_likelihood,
    log_posterior_unconstrained,
    log_prior,
    transform,
)
from ._sampler import (
    PARAMETER_NAMES,
    STAT_NAMES,
    HmcConfig,
    PosteriorDraws,
    SamplerAbortError,
    hmc_step,
    leapfrog,
    random_walk_metropolis,
    run_chains,
    rwmh_baseline,
    sample_target,
)
from ._simulate import (
    EXPERIMENTS,
    Dataset,
    generate_experiment1,
    generate_experiment2,
    split,
)

__all__ = (
    "ModelConfig",
    "ParameterVector",
    "RegressionDataset",
    "build_regression",
    "gmm_log_density",
    "initialize",
    "inverse_transform",
    "log_likelihood",
    "log_posterior_unconstrained",
    "log_prior",
    "transform",
    "LogPosterior",
    "finite_difference",
    "finite_difference_gradient",
    "grad_log_posterior",
    "PARAMETER_NAMES",
    "STAT_NAMES",
    "HmcConfig",
    "PosteriorDraws",
    "SamplerAbortError",
    "hmc_step",
    "leapfrog",
    "random_walk_metropolis",
    "run_chains",
    "rwmh_baseline",
    "sample_target",
    "HpdRegion",
    "OneStepPrediction",
    "PredictiveDensity",
    "active_components",
    "coefficient_summaries",
    "component_summaries",
    "default_grid",
    "density_modes",
    "gaussian_noise_reference",
    "hpd_region",
    "hyperparameter_summaries",
    "model_fit",
    "noise_density_estimate",
    "noise_grid",
    "one_step_ahead",
    "predictive_density",
    "BaselineResult",
    "LeastSquaresARX",
    "ls_arx_baseline",
    "EXPERIMENTS",
    "Dataset",
    "generate_experiment1",
    "generate_experiment2",
    "split",
    "effective_sample_size",
    "energy_bfmi",
    "mcse_mean",
    "parameter_diagnostics",
    "split_rhat",
    "summarize",
)
