"""
Description: Posterior summaries and one-step-ahead predictive distributions
computed from retained draws.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.stats import norm

from ._model import RegressionDataset
from ._sampler import PosteriorDraws

DEFAULT_GRID_POINTS = 2001
DRAW_CHUNK = 128
# weights below this do not widen the evaluation grid
WEIGHT_FLOOR = 1e-3


@dataclass
class PredictiveDensity:
    """
    A density tabulated on a grid.

    Parameters
    ----------
    t : int, optional
        Time index of the predicted output; ``None`` for noise densities.
    grid : np.ndarray
        Strictly increasing evaluation points.
    density : np.ndarray
        Non-negative density values at ``grid``.
    mean : float
        Mean of the distribution, computed from the draws rather than the grid.
    """

    t: Optional[int]
    grid: np.ndarray
    density: np.ndarray
    mean: float

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.grid.shape != self.density.shape or self.grid.ndim != 1:
            raise ValueError("grid and density should be 1D of equal length")
        if np.any(self.density < 0):
            raise ValueError("density should be non-negative")

    def integral(self) -> float:
        return float(trapezoid(self.density, self.grid))

    def grid_mean(self) -> float:
        """First moment of the tabulated density."""
        return float(trapezoid(self.grid * self.density, self.grid)) / self.integral()


@dataclass
class HpdRegion:
    """
    Highest-density region as a union of disjoint, sorted intervals.

    ``truncated`` is set when the grid does not carry ``level`` of the
    probability; the region is then the whole grid.
    """

    level: float
    intervals: List[tuple]
    masses: List[float] = field(default_factory=list)
    coverage: float = 0.0
    truncated: bool = False

    def contains(self, value: float) -> bool:
        return any(lo <= value <= hi for lo, hi in self.intervals)

    def to_string(self) -> str:
        """Serialized as ``lo1:hi1;lo2:hi2``."""
        return ";".join(f"{lo:.10g}:{hi:.10g}" for lo, hi in self.intervals)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float).ravel()
    if len(grid) < 2:
        raise ValueError("grid should have at least 2 points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid should be strictly increasing")
    return grid


def _check_draws(draws: PosteriorDraws) -> None:
    if draws.n_draws == 0:
        raise ValueError("no posterior draws")


def _mixture_average(
    centers: np.ndarray,
    w: np.ndarray,
    mu: np.ndarray,
    sigma: np.ndarray,
    grid: np.ndarray,
) -> np.ndarray:
    """
    Average over draws of ``sum_k w_k N(g; center + mu_k, sigma_k^2)``.

    ``centers`` has one value per draw, the mixture arrays one row per draw.
    """
    total = np.zeros(len(grid))
    for start in range(0, len(centers), DRAW_CHUNK):
        stop = start + DRAW_CHUNK
        loc = (centers[start:stop, None] + mu[start:stop])[..., None]
        scale = sigma[start:stop][..., None]
        values = norm.pdf(grid, loc=loc, scale=scale)
        total += np.einsum("dk,dkg->g", w[start:stop], values)
    return total / len(centers)


def predictive_density(
    draws: PosteriorDraws, phi_t: np.ndarray, grid, t: Optional[int] = None
) -> PredictiveDensity:
    """
    One-step-ahead predictive density of the output for one regressor row.

    Parameters
    ----------
    draws : PosteriorDraws
        Posterior draws.
    phi_t : np.ndarray
        Regressor row ``[-y_{t-1}, ..., u_{t-1}, ...]``.
    grid : array-like
        Strictly increasing evaluation points.
    t : int, optional
        Time index recorded in the result.

    Returns
    -------
    PredictiveDensity
        Posterior average of the shifted noise mixtures, with the mean
        ``phi_t . theta + sum_k w_k mu_k`` averaged over draws.
    """
    _check_draws(draws)
    grid = _check_grid(grid)
    phi_t = np.asarray(phi_t, dtype=float).ravel()
    centers = draws.coefficients() @ phi_t
    w, mu, sigma = draws.flat("w"), draws.flat("mu"), draws.flat("sigma")
    density = _mixture_average(centers, w, mu, sigma, grid)
    mean = float(np.mean(centers + np.sum(w * mu, axis=1)))
    return PredictiveDensity(t=t, grid=grid, density=density, mean=mean)


def noise_density_estimate(draws: PosteriorDraws, grid) -> PredictiveDensity:
    """Posterior mean of the noise mixture density."""
    _check_draws(draws)
    grid = _check_grid(grid)
    w, mu, sigma = draws.flat("w"), draws.flat("mu"), draws.flat("sigma")
    density = _mixture_average(np.zeros(len(w)), w, mu, sigma, grid)
    mean = float(np.mean(np.sum(w * mu, axis=1)))
    return PredictiveDensity(t=None, grid=grid, density=density, mean=mean)


def _largest_active_sigma(draws: PosteriorDraws) -> float:
    w, sigma = draws.flat("w"), draws.flat("sigma")
    active = sigma[w >= WEIGHT_FLOOR]
    return float(np.max(active)) if active.size else float(np.max(sigma))


def default_grid(
    y: np.ndarray, draws: PosteriorDraws, n: int = DEFAULT_GRID_POINTS
) -> np.ndarray:
    """
    Prediction grid ``[min(y) - 4 s, max(y) + 4 s]`` where ``s`` is the largest
    std-dev among components with weight at least ``WEIGHT_FLOOR``.

    Switched-off components keep std-devs drawn from their heavy-tailed prior
    and are left out; together they carry less than ``n_e * WEIGHT_FLOOR`` of
    the predictive mass.
    """
    _check_draws(draws)
    y = np.asarray(y, dtype=float)
    spread = 4.0 * _largest_active_sigma(draws)
    return np.linspace(np.min(y) - spread, np.max(y) + spread, n)


def noise_grid(
    draws: PosteriorDraws,
    n: int = DEFAULT_GRID_POINTS,
    residuals: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Noise grid covering every non-negligible component mean by four of the
    largest std-devs, widened to cover ``residuals`` when given.
    """
    _check_draws(draws)
    w, mu = draws.flat("w"), draws.flat("mu")
    centers = mu[w >= WEIGHT_FLOOR]
    if not centers.size:
        centers = mu.ravel()
    spread = 4.0 * _largest_active_sigma(draws)
    lo, hi = np.min(centers) - spread, np.max(centers) + spread
    if residuals is not None and len(residuals) > 1:
        r_spread = 4.0 * np.std(residuals)
        lo = min(lo, np.mean(residuals) - r_spread)
        hi = max(hi, np.mean(residuals) + r_spread)
    return np.linspace(lo, hi, n)


def _cell_weights(grid: np.ndarray) -> np.ndarray:
    """Trapezoid quadrature weights of each grid point."""
    widths = np.diff(grid)
    weights = np.zeros(len(grid))
    weights[:-1] += widths / 2
    weights[1:] += widths / 2
    return weights


def _runs(mask: np.ndarray) -> List[tuple]:
    """Start and stop indices (inclusive) of the True runs in ``mask``."""
    padded = np.concatenate(([False], mask, [False])).astype(int)
    edges = np.flatnonzero(np.diff(padded))
    return [(start, stop - 1) for start, stop in edges.reshape(-1, 2)]


def hpd_region(pd_: PredictiveDensity, level: float = 0.95) -> HpdRegion:
    """
    Highest-density region of a tabulated density.

    The density cutoff is lowered until the super-level set carries at least
    ``level`` of the probability; its connected runs on the grid are the
    intervals.

    Parameters
    ----------
    pd_ : PredictiveDensity
        Density to summarize.
    level : float
        Requested probability, in (0, 1).

    Returns
    -------
    HpdRegion
        When the whole grid carries less than ``level``, the region is the
        full grid with ``truncated=True`` and a warning is issued.
    """
    if not 0 < level < 1:
        raise ValueError(f"level should lie in (0, 1), got {level}")
    grid, density = pd_.grid, pd_.density
    mass = density * _cell_weights(grid)
    total = float(np.sum(mass))

    if total < level:
        warnings.warn(
            f"grid carries {total:.4f} probability, less than the requested "
            f"HPD level {level}; returning the full grid"
        )
        return HpdRegion(
            level=level,
            intervals=[(float(grid[0]), float(grid[-1]))],
            masses=[total],
            coverage=total,
            truncated=True,
        )

    order = np.argsort(density, kind="stable")[::-1]
    cumulative = np.cumsum(mass[order])
    k = int(np.searchsorted(cumulative, level))
    cutoff = density[order[min(k, len(order) - 1)]]
    inside = density >= cutoff

    intervals, masses = [], []
    for start, stop in _runs(inside):
        intervals.append((float(grid[start]), float(grid[stop])))
        masses.append(float(np.sum(mass[start : stop + 1])))
    return HpdRegion(
        level=level,
        intervals=intervals,
        masses=masses,
        coverage=float(np.sum(masses)),
    )


def density_modes(pd_: PredictiveDensity, region: HpdRegion) -> pd.DataFrame:
    """Location and height of the density maximum inside each HPD interval."""
    rows = []
    for (lo, hi), mass in zip(region.intervals, region.masses):
        inside = (pd_.grid >= lo) & (pd_.grid <= hi)
        index = np.flatnonzero(inside)
        peak = index[np.argmax(pd_.density[index])]
        rows.append(
            {
                "lo": lo,
                "hi": hi,
                "mode": float(pd_.grid[peak]),
                "density": float(pd_.density[peak]),
                "mass": mass,
            }
        )
    return pd.DataFrame(rows, columns=["lo", "hi", "mode", "density", "mass"])


def model_fit(y_true, y_pred) -> float:
    """
    Model fit in percent, ``100 (1 - sum (y - yhat)^2 / sum (y - mean y)^2)``.
    """
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if len(y_true) != len(y_pred):
        raise ValueError(
            f"y_true and y_pred lengths differ ({len(y_true)} != {len(y_pred)})"
        )
    if len(y_true) < 2:
        raise ValueError("model fit needs at least 2 points")
    residual_sum_of_squares = np.sum((y_true - y_pred) ** 2)
    total_sum_of_squares = np.sum((y_true - np.mean(y_true)) ** 2)
    if total_sum_of_squares == 0:
        raise ValueError("model fit is undefined for a constant y_true")
    return float(100.0 * (1.0 - residual_sum_of_squares / total_sum_of_squares))


def _summaries(names: Sequence[str], values: np.ndarray) -> pd.DataFrame:
    values = np.asarray(values, dtype=float)
    if values.shape[0] == 0:
        raise ValueError("no posterior draws")
    ddof = 1 if values.shape[0] > 1 else 0
    lower, upper = np.quantile(values, [0.025, 0.975], axis=0)
    table = pd.DataFrame(
        {
            "mean": np.mean(values, axis=0),
            # offsets from the first draw keep constant columns at exactly 0
            "sd": np.std(values - values[0], axis=0, ddof=ddof),
            "lower": lower,
            "upper": upper,
        },
        index=pd.Index(list(names), name="parameter"),
    )
    return table


def coefficient_summaries(draws: PosteriorDraws) -> pd.DataFrame:
    """
    Posterior mean, sd and central 95% interval of every ARX coefficient, and
    whether that interval excludes zero.
    """
    table = _summaries(
        draws.model_config.coefficient_names(), draws.coefficients()
    )
    table["excludes_zero"] = (table["lower"] > 0) | (table["upper"] < 0)
    return table


def hyperparameter_summaries(draws: PosteriorDraws) -> pd.DataFrame:
    names = ("sigma_f", "sigma_mu", "e0")
    values = np.column_stack([draws.flat(name) for name in names])
    return _summaries(names, values)


def active_components(
    draws: PosteriorDraws, threshold: float = 0.05
) -> pd.Series:
    """
    Posterior probability of the number of components whose weight exceeds
    ``threshold``.
    """
    _check_draws(draws)
    w = draws.flat("w")
    counts = np.sum(w > threshold, axis=1)
    index = pd.RangeIndex(0, w.shape[1] + 1, name="n_active")
    probability = np.bincount(counts, minlength=w.shape[1] + 1) / len(counts)
    return pd.Series(probability, index=index, name="probability")


def component_summaries(draws: PosteriorDraws) -> pd.DataFrame:
    """
    Marginal summaries of the mixture weights, means and std-devs per label.

    Labels are not identified, so these numbers depend on which mode of the
    permutation-symmetric posterior the chains visited.
    """
    warnings.warn(
        "component summaries depend on the mixture labelling and are not "
        "comparable across runs"
    )
    names, columns = [], []
    for name in ("w", "mu", "sigma"):
        values = draws.flat(name)
        for k in range(values.shape[1]):
            names.append(f"{name}{k + 1}")
            columns.append(values[:, k])
    table = _summaries(names, np.column_stack(columns))
    table.attrs["label_dependent"] = True
    return table


def gaussian_noise_reference(residuals, grid) -> PredictiveDensity:
    """Single Gaussian with the sample mean and std-dev of ``residuals``."""
    residuals = np.asarray(residuals, dtype=float).ravel()
    if len(residuals) < 2:
        raise ValueError("at least 2 residuals are required")
    grid = _check_grid(grid)
    mean, sd = float(np.mean(residuals)), float(np.std(residuals, ddof=1))
    if not sd > 0:
        raise ValueError("residuals have zero spread")
    density = norm.pdf(grid, loc=mean, scale=sd)
    return PredictiveDensity(t=None, grid=grid, density=density, mean=mean)


@dataclass
class OneStepPrediction:
    """
    Predictive distributions for a block of consecutive time steps.

    ``densities`` has one row per entry of ``t``, tabulated on ``grid``.
    """

    t: np.ndarray
    y: np.ndarray
    mean: np.ndarray
    grid: np.ndarray
    densities: np.ndarray
    regions: List[HpdRegion]

    def density_at(self, t: int) -> PredictiveDensity:
        index = np.flatnonzero(self.t == t)
        if not len(index):
            raise KeyError(f"no prediction for time index {t}")
        i = int(index[0])
        return PredictiveDensity(
            t=int(t), grid=self.grid, density=self.densities[i], mean=self.mean[i]
        )

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": self.t,
                "y": self.y,
                "mean": self.mean,
                "hpd": [region.to_string() for region in self.regions],
            }
        )


def one_step_ahead(
    draws: PosteriorDraws,
    regression: RegressionDataset,
    grid=None,
    level: float = 0.95,
    max_draws: Optional[int] = None,
    progress: Optional[Callable] = None,
) -> OneStepPrediction:
    """
    Predictive density, mean and HPD region of every regression row.

    Parameters
    ----------
    draws : PosteriorDraws
        Posterior draws.
    regression : RegressionDataset
        Rows to predict, usually the validation part.
    grid : array-like, optional
        Evaluation points; ``default_grid`` of the targets when omitted.
    level : float
        HPD probability.
    max_draws : int, optional
        Evenly spaced subset of the draws to use.
    progress : callable, optional
        Iterable wrapper such as ``tqdm``.
    """
    draws = draws.thin(max_draws)
    _check_draws(draws)
    if grid is None:
        grid = default_grid(regression.y_target, draws)
    grid = _check_grid(grid)

    rows = range(regression.n_rows)
    if progress is not None:
        rows = progress(rows)
    densities = np.empty((regression.n_rows, len(grid)))
    means = np.empty(regression.n_rows)
    regions = []
    for i in rows:
        density = predictive_density(
            draws, regression.phi[i], grid, t=int(regression.t[i])
        )
        densities[i] = density.density
        means[i] = density.mean
        regions.append(hpd_region(density, level))
    return OneStepPrediction(
        t=regression.t.copy(),
        y=regression.y_target.copy(),
        mean=means,
        grid=grid,
        densities=densities,
        regions=regions,
    )
