"""
Description: Convergence and efficiency diagnostics of MCMC output.
"""

import warnings

import numpy as np
import pandas as pd

from ._sampler import PosteriorDraws

# label-invariant scalars worth gating on; mixture components are excluded
_GLOBAL_SCALES = ("sigma_f", "sigma_mu", "e0")


def _as_chains(chains, min_chains: int, min_length: int) -> np.ndarray:
    chains = np.asarray(chains, dtype=float)
    if chains.ndim == 1:
        chains = chains[None, :]
    if chains.ndim != 2:
        raise ValueError("chains should be a 2D array (n_chains, n_draws)")
    if chains.shape[0] < min_chains:
        raise ValueError(f"at least {min_chains} chains are required")
    if chains.shape[1] < min_length:
        raise ValueError(f"chains should have at least {min_length} draws")
    return chains


def split_chains(chains: np.ndarray) -> np.ndarray:
    """Split every chain in half, dropping the middle draw of odd lengths."""
    half = chains.shape[1] // 2
    return np.concatenate((chains[:, :half], chains[:, -half:]), axis=0)


def split_rhat(chains) -> float:
    """
    Split potential scale reduction factor of a scalar quantity.

    Parameters
    ----------
    chains : array-like
        Draws with shape ``(n_chains, n_draws)``.

    Returns
    -------
    float
        ``sqrt(((N-1)/N W + B/N) / W)`` over the half-chains; NaN (with a
        warning) when the draws have no within-chain variance.
    """
    chains = split_chains(_as_chains(chains, 2, 4))
    n = chains.shape[1]
    within = np.mean(np.var(chains, axis=1, ddof=1))
    between = n * np.var(np.mean(chains, axis=1), ddof=1)
    if not within > 0:
        warnings.warn("split-R-hat is degenerate for constant chains")
        return np.nan
    return float(np.sqrt(((n - 1) / n * within + between / n) / within))


def autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance at every lag, computed by FFT."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    centered = x - x.mean()
    size = 1 << int(np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(centered, n=size)
    return np.fft.irfft(spectrum * np.conjugate(spectrum), n=size)[:n] / n


def effective_sample_size(chain) -> float:
    """
    Effective sample size with Geyer's initial monotone sequence truncation.

    Parameters
    ----------
    chain : array-like
        One series, or several chains as ``(n_chains, n_draws)``; multiple
        chains are combined through the between-chain variance.

    Returns
    -------
    float
        Estimated number of independent draws; NaN (with a warning) for a
        constant series.
    """
    chains = _as_chains(chain, 1, 10)
    n_chains, n = chains.shape
    acov = np.array([autocovariance(c) for c in chains])
    chain_var = acov[:, 0] * n / (n - 1.0)
    within = np.mean(chain_var)
    var_plus = within * (n - 1.0) / n
    if n_chains > 1:
        var_plus += np.var(np.mean(chains, axis=1), ddof=1)
    if not var_plus > 0:
        warnings.warn("effective sample size is degenerate for constant draws")
        return np.nan

    rho = 1.0 - (within - np.mean(acov, axis=0)) / var_plus
    rho[0] = 1.0
    n_pairs = len(rho) // 2
    pairs = rho[: 2 * n_pairs].reshape(n_pairs, 2).sum(axis=1)
    total = 0.0
    previous = np.inf
    for value in pairs:
        if not value > 0:
            break
        value = min(value, previous)
        total += value
        previous = value
    tau = -1.0 + 2.0 * total
    n_total = n_chains * n
    ess = n_total / tau if tau > 0 else np.inf
    # antithetic chains can push the estimate past the draw count
    return float(min(ess, 1.5 * n_total))


def mcse_mean(chain) -> float:
    """Monte Carlo standard error of the mean."""
    chains = _as_chains(chain, 1, 10)
    return float(np.std(chains, ddof=1) / np.sqrt(effective_sample_size(chains)))


def energy_bfmi(energy: np.ndarray) -> np.ndarray:
    """Energy Bayesian fraction of missing information, one value per chain."""
    energy = np.atleast_2d(np.asarray(energy, dtype=float))
    numerator = np.sum(np.diff(energy, axis=1) ** 2, axis=1)
    denominator = np.sum((energy - energy.mean(axis=1, keepdims=True)) ** 2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return numerator / denominator


def _scalar_series(draws: PosteriorDraws) -> dict:
    series = {}
    names = draws.model_config.coefficient_names()
    coefficients = np.concatenate((draws["a"], draws["b"]), axis=2)
    for k, name in enumerate(names):
        series[name] = coefficients[:, :, k]
    for name in _GLOBAL_SCALES:
        series[name] = draws[name]
    return series


def parameter_diagnostics(draws: PosteriorDraws) -> pd.DataFrame:
    """
    Mean, sd, Monte Carlo error, ESS and split-R-hat per scalar parameter.

    Only label-invariant parameters are listed: the regression coefficients
    and the three global scales.
    """
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, chains in _scalar_series(draws).items():
            ess = effective_sample_size(chains)
            rows.append(
                {
                    "parameter": name,
                    "mean": float(np.mean(chains)),
                    "sd": float(np.std(chains, ddof=1)),
                    "mcse": float(np.std(chains, ddof=1) / np.sqrt(ess)),
                    "ess": ess,
                    "rhat": (
                        split_rhat(chains) if chains.shape[0] > 1 else np.nan
                    ),
                }
            )
    return pd.DataFrame(rows).set_index("parameter")


def summarize(draws: PosteriorDraws) -> dict:
    """Headline diagnostics of a run."""
    table = parameter_diagnostics(draws)
    coefficient_rows = table.loc[draws.model_config.coefficient_names()]
    return {
        "max_rhat": float(np.nanmax(coefficient_rows["rhat"].to_numpy()))
        if coefficient_rows["rhat"].notna().any()
        else None,
        "min_ess": float(np.nanmin(table["ess"].to_numpy()))
        if table["ess"].notna().any()
        else None,
        "divergences": int(np.sum(draws.stats["divergent"])),
        "mean_accept_stat": float(np.mean(draws.stats["accept_stat"])),
        "ebfmi": [float(v) for v in energy_bfmi(draws.stats["energy"])],
        "parameters": table.reset_index().to_dict(orient="records"),
    }
