"""
Description: Synthetic ARX data sets and estimation/validation splitting.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

EXPERIMENT1_A = (-1.5, 0.7)
EXPERIMENT1_B = (0.0, 1.0, 0.5)
# only a_2 and a_3 are given for the mixture-noise system, so a_1 is zero
EXPERIMENT2_A = (0.0, -0.25, 0.2)
EXPERIMENT2_B = (0.0, 1.0, 0.5)
EXPERIMENT2_NOISE = {"w": (0.4, 0.6), "mu": (7.0, 0.0), "sigma": (1.0, 1.0)}
PRBS_MEAN_HOLD = 5


@dataclass
class Dataset:
    """
    Input/output series with provenance.

    Parameters
    ----------
    y : np.ndarray
        Output series.
    u : np.ndarray, optional
        Input series, same length as ``y``.
    meta : dict
        Generator settings and seed, or file provenance.
    """

    y: np.ndarray
    u: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.u is not None:
            self.u = np.asarray(self.u, dtype=float).ravel()
            if len(self.u) != len(self.y):
                raise ValueError(
                    f"input and output lengths differ "
                    f"({len(self.u)} != {len(self.y)})"
                )

    def __len__(self) -> int:
        return len(self.y)


def prbs(
    length: int, rng: np.random.Generator, mean_hold: float = PRBS_MEAN_HOLD
) -> np.ndarray:
    """
    Pseudo-random binary signal in {-1, +1} with geometric hold times.
    """
    levels = np.empty(length)
    level = 1.0 if rng.random() < 0.5 else -1.0
    position = 0
    while position < length:
        hold = int(rng.geometric(1.0 / mean_hold))
        levels[position : position + hold] = level
        position += hold
        level = -level
    return levels


def simulate_arx(
    a: Sequence[float],
    b: Sequence[float],
    u: np.ndarray,
    e: np.ndarray,
) -> np.ndarray:
    """
    Simulate ``y_t = -sum_k a_k y_{t-k} + sum_k b_k u_{t-k} + e_t`` from rest.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    y = np.zeros(len(e))
    for t in range(len(e)):
        value = e[t]
        for k in range(1, min(len(a), t) + 1):
            value -= a[k - 1] * y[t - k]
        for k in range(1, min(len(b), t) + 1):
            value += b[k - 1] * u[t - k]
        y[t] = value
    return y


def _check_length(T: int) -> None:
    if T < 50:
        raise ValueError(f"T should be at least 50, got {T}")


def generate_experiment1(
    T: int = 1000, seed: int = 0, noise_scale: float = 1.0
) -> Dataset:
    """
    Second-order system driven by a pseudo-random binary input, with white
    Gaussian output noise.

    Parameters
    ----------
    T : int
        Number of samples.
    seed : int
        Generator seed; the data are a pure function of ``(T, seed)``.
    noise_scale : float
        Std-dev of the noise; zero gives noise-free data.
    """
    _check_length(T)
    rng = np.random.default_rng(seed)
    u = prbs(T, rng)
    e = noise_scale * rng.standard_normal(T)
    y = simulate_arx(EXPERIMENT1_A, EXPERIMENT1_B, u, e)
    return Dataset(
        y=y,
        u=u,
        meta={
            "generator": "experiment1",
            "T": T,
            "seed": seed,
            "a": list(EXPERIMENT1_A),
            "b": list(EXPERIMENT1_B),
            "noise": {"kind": "gaussian", "sigma": noise_scale},
            "input": {"kind": "prbs", "mean_hold": PRBS_MEAN_HOLD},
        },
    )


def mixture_noise(
    size: int,
    rng: np.random.Generator,
    w: Sequence[float] = EXPERIMENT2_NOISE["w"],
    mu: Sequence[float] = EXPERIMENT2_NOISE["mu"],
    sigma: Sequence[float] = EXPERIMENT2_NOISE["sigma"],
) -> np.ndarray:
    """Draws from a Gaussian mixture."""
    component = rng.choice(len(w), size=size, p=np.asarray(w))
    return np.asarray(mu)[component] + np.asarray(sigma)[
        component
    ] * rng.standard_normal(size)


def generate_experiment2(T: int = 1000, seed: int = 0) -> Dataset:
    """
    Third-order system driven by white Gaussian input, with bimodal noise
    ``0.4 N(7, 1) + 0.6 N(0, 1)``.
    """
    _check_length(T)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(T)
    e = mixture_noise(T, rng)
    y = simulate_arx(EXPERIMENT2_A, EXPERIMENT2_B, u, e)
    return Dataset(
        y=y,
        u=u,
        meta={
            "generator": "experiment2",
            "T": T,
            "seed": seed,
            "a": list(EXPERIMENT2_A),
            "b": list(EXPERIMENT2_B),
            "noise": {"kind": "gmm", **{k: list(v) for k, v in EXPERIMENT2_NOISE.items()}},
            "input": {"kind": "gaussian"},
        },
    )


EXPERIMENTS = {1: generate_experiment1, 2: generate_experiment2}


def split_index(T: int, fraction: float) -> int:
    if not 0 < fraction < 1:
        raise ValueError(f"fraction should lie in (0, 1), got {fraction}")
    return int(np.floor(fraction * T + 1e-9))


def split(
    ds: Dataset, fraction: float, order: int = 0
) -> Tuple[Dataset, Dataset]:
    """
    Contiguous estimation/validation split.

    Parameters
    ----------
    ds : Dataset
        Series to split.
    fraction : float
        Share of the samples assigned to estimation.
    order : int
        Model order ``p``; each part must keep at least ``p + 1`` samples.

    Returns
    -------
    tuple
        Estimation and validation datasets. The validation part records its
        ``offset`` in the full series, so its regressors can reach back into
        the estimation part.
    """
    index = split_index(len(ds), fraction)
    if index < order + 1 or len(ds) - index < order + 1:
        raise ValueError(
            f"split at {index} of {len(ds)} samples leaves fewer than "
            f"{order + 1} samples on one side"
        )
    u = ds.u
    estimation = replace(
        ds,
        y=ds.y[:index],
        u=None if u is None else u[:index],
        meta={**ds.meta, "part": "estimation", "offset": 0},
    )
    validation = replace(
        ds,
        y=ds.y[index:],
        u=None if u is None else u[index:],
        meta={**ds.meta, "part": "validation", "offset": index},
    )
    return estimation, validation
