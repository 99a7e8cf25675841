"""
Description: ``barx`` command line: simulate data, fit the posterior, predict
validation data and report on a run.
"""

import argparse
import logging
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from . import __version__
from .io import (
    load_csv,
    read_config,
    read_draws,
    read_json,
    save_csv,
    write_draws_ndjson,
    write_json,
    write_table,
)
from .libs import (
    EXPERIMENTS,
    HmcConfig,
    ModelConfig,
    SamplerAbortError,
    active_components,
    build_regression,
    coefficient_summaries,
    default_grid,
    density_modes,
    gaussian_noise_reference,
    hpd_region,
    hyperparameter_summaries,
    ls_arx_baseline,
    model_fit,
    noise_density_estimate,
    noise_grid,
    one_step_ahead,
    run_chains,
    split,
    summarize,
)
from .libs._baseline import default_order_grid

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_SAMPLER_ABORT = 3
THREADS_VARIABLE = "BARX_THREADS"
DRAWS_FILE = "draws.ndjson"
SUMMARY_FILE = "summary.json"


def _fresh_seed() -> int:
    seed = int(np.random.SeedSequence().entropy % (2**63))
    warnings.warn(f"no seed given, using seed {seed} drawn from entropy")
    return seed


def _apply_thread_cap(config: HmcConfig) -> HmcConfig:
    value = os.environ.get(THREADS_VARIABLE)
    if value is None or config.max_workers is not None:
        return config
    try:
        threads = int(value)
    except ValueError:
        raise ValueError(
            f"{THREADS_VARIABLE} should be a positive integer, got {value!r}"
        ) from None
    return replace(config, max_workers=threads)


def _records(table: pd.DataFrame) -> list:
    return table.reset_index().to_dict(orient="records")


def simulate(args) -> int:
    seed = _fresh_seed() if args.seed is None else args.seed
    kwargs = {"T": args.T, "seed": seed}
    if args.noise_scale is not None:
        if args.experiment != 1:
            raise ValueError("--noise-scale only applies to experiment 1")
        kwargs["noise_scale"] = args.noise_scale
    ds = EXPERIMENTS[args.experiment](**kwargs)
    paths = save_csv(args.out, ds)
    logger.info("wrote %s", ", ".join(str(p) for p in paths))
    return EXIT_OK


def fit(args) -> int:
    ds = load_csv(args.data)
    model_config, hmc_config = read_config(args.config)
    if args.seed is not None:
        hmc_config = replace(hmc_config, seed=args.seed)
    hmc_config = _apply_thread_cap(hmc_config).resolve_seed()

    estimation = ds
    if args.split is not None:
        estimation, _ = split(ds, args.split, order=model_config.order)
    regression = build_regression(estimation.y, estimation.u, model_config)
    logger.info(
        "fitting %d regression rows, %d chains of %d iterations",
        regression.n_rows,
        hmc_config.n_chains,
        hmc_config.n_iterations,
    )

    draws = run_chains(
        regression,
        model_config,
        hmc_config,
        progress=tqdm if args.progress else None,
    )

    out = Path(args.out)
    write_draws_ndjson(out / DRAWS_FILE, draws)
    summary = {
        "version": __version__,
        "settings": {
            "model": model_config.to_dict(),
            "sampler": hmc_config.to_dict(),
        },
        "data": {
            "source": str(args.data),
            "n_samples": len(ds),
            "split": args.split,
            "n_estimation": len(estimation),
            "n_rows": regression.n_rows,
            "has_input": ds.u is not None,
            "meta": ds.meta,
        },
        "rng": draws.metadata["rng"],
        "coefficients": _records(coefficient_summaries(draws)),
        "hyperparameters": _records(hyperparameter_summaries(draws)),
        "active_components": active_components(draws).to_dict(),
        "diagnostics": summarize(draws),
        "step_size": draws.step_size,
        "warmup_divergences": draws.metadata["warmup_divergences"],
    }
    write_json(out / SUMMARY_FILE, summary)
    logger.info("wrote %s and %s", out / DRAWS_FILE, out / SUMMARY_FILE)
    return EXIT_OK


def _parse_time_indices(value: Optional[str]) -> List[int]:
    if not value:
        return []
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise ValueError(
            f"--save-densities expects comma separated integers, got {value!r}"
        ) from None


def _coverage(prediction) -> float:
    inside = [
        region.contains(y) for region, y in zip(prediction.regions, prediction.y)
    ]
    return float(np.mean(inside))


def predict(args) -> int:
    run = Path(args.run)
    summary = read_json(run / SUMMARY_FILE)
    model_config = ModelConfig.from_dict(summary["settings"]["model"])
    draws = read_draws(run / DRAWS_FILE, model_config).thin(args.max_draws)

    fraction = args.split if args.split is not None else summary["data"]["split"]
    if fraction is None:
        raise ValueError("the run was fitted on all data; pass --split")
    if summary["data"]["split"] not in (None, fraction):
        warnings.warn(
            f"predicting with split {fraction} but the run was fitted with "
            f"split {summary['data']['split']}"
        )

    ds = load_csv(args.data)
    estimation, validation = split(ds, fraction, order=model_config.order)
    offset = validation.meta["offset"]
    regression = build_regression(ds.y, ds.u, model_config, first_target=offset)

    grid = default_grid(ds.y, draws, n=args.grid_points)
    prediction = one_step_ahead(
        draws,
        regression,
        grid=grid,
        level=args.level,
        progress=tqdm if args.progress else None,
    )

    order_grid = default_order_grid(has_input=ds.u is not None)
    baseline = ls_arx_baseline(estimation.y, estimation.u, order_grid)
    baseline_prediction = baseline.predict(ds.y, ds.u, first_target=offset)

    table = prediction.to_dataframe()
    table["baseline"] = baseline_prediction

    residuals = baseline.model.residuals(estimation.y, estimation.u)
    noise_points = noise_grid(draws, n=args.grid_points, residuals=residuals)
    noise = noise_density_estimate(draws, noise_points)
    reference = gaussian_noise_reference(residuals, noise_points)
    noise_region = hpd_region(noise, args.level)

    out = Path(args.out)
    write_table(out / "predictive.csv", table)
    write_table(
        out / "noise_density.csv",
        pd.DataFrame(
            {
                "grid": noise_points,
                "density": noise.density,
                "gaussian_reference": reference.density,
            }
        ),
    )

    requested = _parse_time_indices(args.save_densities)
    if requested:
        columns = {"grid": prediction.grid}
        for t in requested:
            columns[f"t{t}"] = prediction.density_at(t).density
        write_table(out / "predictive_density.csv", pd.DataFrame(columns))

    metrics = {
        "model_fit": {
            "barx": model_fit(prediction.y, prediction.mean),
            "baseline": model_fit(prediction.y, baseline_prediction),
        },
        "baseline": {
            **baseline.model.to_dict(),
            "selection": baseline.selection.to_dict(orient="records"),
        },
        "hpd": {"level": args.level, "empirical_coverage": _coverage(prediction)},
        "noise": {
            "mean": noise.mean,
            "modes": density_modes(noise, noise_region).to_dict(orient="records"),
        },
        "split": fraction,
        "n_validation": int(len(prediction.t)),
        "n_draws_used": draws.n_draws,
    }
    write_json(out / "metrics.json", metrics)
    logger.info(
        "model fit %.2f%% (baseline %.2f%%)",
        metrics["model_fit"]["barx"],
        metrics["model_fit"]["baseline"],
    )
    return EXIT_OK


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.4g}"


def report(args) -> int:
    summary = read_json(Path(args.run) / SUMMARY_FILE)
    diagnostics = summary["diagnostics"]
    lines = [
        f"run: {args.run}",
        f"seed: {summary['rng']['seed']}",
        f"max R-hat: {_fmt(diagnostics['max_rhat'])}",
        f"min ESS: {_fmt(diagnostics['min_ess'])}",
        f"divergences: {diagnostics['divergences']}",
    ]
    if args.pred is not None:
        metrics = read_json(Path(args.pred) / "metrics.json")
        lines.append(f"MF BARX: {_fmt(metrics['model_fit']['barx'])}%")
        lines.append(f"MF baseline: {_fmt(metrics['model_fit']['baseline'])}%")
    coefficients = pd.DataFrame(summary["coefficients"]).set_index("parameter")
    parameters = pd.DataFrame(diagnostics["parameters"]).set_index("parameter")
    table = coefficients.join(parameters[["ess", "rhat"]], how="left")
    print("\n".join(lines))
    print()
    print(table.to_string(float_format=lambda v: f"{v:.4g}"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="barx",
        description="Bayesian ARX identification with Gaussian-mixture noise",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="debug logging"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--experiment", type=int, choices=sorted(EXPERIMENTS), required=True)
    p.add_argument("--T", type=int, default=1000, help="number of samples")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument(
        "--noise-scale", type=float, default=None, help="experiment 1 noise std-dev"
    )
    p.add_argument("--out", required=True, help="CSV file to write")
    p.set_defaults(handler=simulate)

    p = commands.add_parser("fit", help="sample the posterior")
    p.add_argument("--data", required=True, help="CSV with y and optional u")
    p.add_argument("--config", default=None, help="JSON settings file")
    p.add_argument("--seed", type=int, default=None, help="overrides the config")
    p.add_argument(
        "--split",
        type=float,
        default=None,
        help="fit only the leading fraction of the data",
    )
    p.add_argument("--progress", action="store_true", help="show progress bars")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(handler=fit)

    p = commands.add_parser("predict", help="predict the validation data")
    p.add_argument("--run", required=True, help="run directory of fit")
    p.add_argument("--data", required=True)
    p.add_argument(
        "--split", type=float, default=None, help="defaults to the split of the run"
    )
    p.add_argument("--level", type=float, default=0.95, help="HPD probability")
    p.add_argument("--max-draws", type=int, default=1000)
    p.add_argument("--grid-points", type=int, default=2001)
    p.add_argument(
        "--save-densities",
        default=None,
        help="comma separated time indices whose densities are saved",
    )
    p.add_argument("--progress", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=predict)

    p = commands.add_parser("report", help="print run diagnostics")
    p.add_argument("--run", required=True)
    p.add_argument(
        "--pred",
        default=None,
        help="prediction directory written by predict; the model fit lines "
        "are printed only when it is given",
    )
    p.set_defaults(handler=report)
    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)


def run_pipeline(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.handler(args)
    except SamplerAbortError as error:
        logger.error("sampler aborted: %s", error)
        return EXIT_SAMPLER_ABORT
    except (ValueError, FileNotFoundError, KeyError) as error:
        logger.error("%s", error)
        return EXIT_BAD_INPUT


def main() -> None:
    sys.exit(run_pipeline())
