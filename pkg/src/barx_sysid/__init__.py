__version__ = "0.1.0"

from .io import load_csv, read_config, read_draws, save_csv
from .libs import (
    HmcConfig,
    ModelConfig,
    PosteriorDraws,
    build_regression,
    generate_experiment1,
    generate_experiment2,
    hpd_region,
    model_fit,
    one_step_ahead,
    run_chains,
    split,
)

__all__ = (
    "load_csv",
    "read_config",
    "read_draws",
    "save_csv",
    "HmcConfig",
    "ModelConfig",
    "PosteriorDraws",
    "build_regression",
    "generate_experiment1",
    "generate_experiment2",
    "hpd_region",
    "model_fit",
    "one_step_ahead",
    "run_chains",
    "split",
)
