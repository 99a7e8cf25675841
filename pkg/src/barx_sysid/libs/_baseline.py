"""
Description: Least-squares ARX estimation with hold-out order selection, the
non-Bayesian reference the posterior predictions are compared against.
"""

import itertools
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, lstsq, solve

from ._model import ModelConfig, RegressionDataset, build_regression

RIDGE = 1e-8
MAX_ORDER = 5


def default_order_grid(has_input: bool = True, max_order: int = MAX_ORDER):
    """Every ``(n_a, n_b)`` with both orders in ``1..max_order``."""
    b_orders = range(1, max_order + 1) if has_input else (0,)
    return list(itertools.product(range(1, max_order + 1), b_orders))


def _regression(y, u, n_a: int, n_b: int, first_target=None) -> RegressionDataset:
    return build_regression(
        y, u, ModelConfig(n_a=n_a, n_b=n_b, n_e=1), first_target=first_target
    )


class LeastSquaresARX:
    """
    ARX model estimated by ordinary least squares.

    Falls back to a ridge solution with a tiny regularizer when the regressor
    matrix is rank deficient; ``ridge`` records whether that happened.
    """

    def __init__(self, n_a: int = 2, n_b: int = 2):
        self.n_a = n_a
        self.n_b = n_b
        self.coefficients = None
        self.ridge = False

    @property
    def order(self) -> int:
        return max(self.n_a, self.n_b)

    def _check_trained(self):
        if self.coefficients is None:
            raise ValueError("model is not trained")

    def train(self, y, u=None, first_target: Optional[int] = None):
        data = _regression(y, u, self.n_a, self.n_b, first_target)
        if data.n_rows < data.phi.shape[1]:
            raise ValueError(
                f"{data.n_rows} rows cannot determine "
                f"{data.phi.shape[1]} coefficients"
            )
        coefficients, _, rank, _ = lstsq(data.phi, data.y_target)
        self.ridge = rank < data.phi.shape[1]
        if self.ridge:
            warnings.warn(
                f"rank deficient regressors for n_a={self.n_a}, "
                f"n_b={self.n_b}; using a ridge solution"
            )
            gram = data.phi.T @ data.phi + RIDGE * np.eye(data.phi.shape[1])
            try:
                coefficients = solve(gram, data.phi.T @ data.y_target, assume_a="pos")
            except LinAlgError:
                coefficients, *_ = lstsq(gram, data.phi.T @ data.y_target)
        self.coefficients = np.asarray(coefficients, dtype=float)
        return self

    def predict(self, y, u=None, first_target: Optional[int] = None) -> np.ndarray:
        """One-step-ahead predictions for ``t = first_target .. T-1``."""
        self._check_trained()
        data = _regression(y, u, self.n_a, self.n_b, first_target)
        return data.phi @ self.coefficients

    def residuals(self, y, u=None, first_target: Optional[int] = None) -> np.ndarray:
        self._check_trained()
        data = _regression(y, u, self.n_a, self.n_b, first_target)
        return data.residuals(self.coefficients)

    def score(self, y, u=None, first_target: Optional[int] = None) -> float:
        """Mean squared one-step prediction error."""
        return float(np.mean(self.residuals(y, u, first_target) ** 2))

    def to_dict(self) -> dict:
        self._check_trained()
        return {
            "n_a": self.n_a,
            "n_b": self.n_b,
            "a": self.coefficients[: self.n_a].tolist(),
            "b": self.coefficients[self.n_a :].tolist(),
            "ridge": bool(self.ridge),
        }


@dataclass
class BaselineResult:
    """
    Selected least-squares model and the hold-out errors of every candidate.
    """

    model: LeastSquaresARX
    selection: pd.DataFrame

    @property
    def orders(self) -> Tuple[int, int]:
        return self.model.n_a, self.model.n_b

    def predict(self, y, u=None, first_target: Optional[int] = None) -> np.ndarray:
        return self.model.predict(y, u, first_target)


def ls_arx_baseline(
    y,
    u=None,
    order_grid: Optional[Iterable[Tuple[int, int]]] = None,
) -> BaselineResult:
    """
    Least-squares ARX with orders chosen on a half/half split of the
    estimation data.

    Each candidate is estimated on the first half and scored by its squared
    one-step prediction error on the second half. The winner is refitted on
    all the estimation data.

    Parameters
    ----------
    y : np.ndarray
        Estimation output series.
    u : np.ndarray, optional
        Estimation input series; without it only ``n_b = 0`` is allowed.
    order_grid : iterable of (int, int), optional
        Candidate ``(n_a, n_b)`` pairs, ``1..5`` for both by default.

    Returns
    -------
    BaselineResult
    """
    y = np.asarray(y, dtype=float).ravel()
    order_grid = (
        default_order_grid(u is not None) if order_grid is None else list(order_grid)
    )
    if not order_grid:
        raise ValueError("order_grid should not be empty")
    if u is None and any(n_b > 0 for _, n_b in order_grid):
        raise ValueError("no input series available; order_grid needs n_b = 0")

    half = len(y) // 2
    highest = max(max(n_a, n_b) for n_a, n_b in order_grid)
    if half <= highest:
        raise ValueError(
            f"series too short: {len(y)} samples for order selection "
            f"up to order {highest}"
        )

    rows = []
    for n_a, n_b in order_grid:
        model = LeastSquaresARX(n_a, n_b)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model.train(y[:half], None if u is None else u[:half])
        rows.append(
            {
                "n_a": n_a,
                "n_b": n_b,
                "mse": model.score(y, u, first_target=half),
                "ridge": model.ridge,
            }
        )
    selection = pd.DataFrame(rows)
    best = selection.loc[selection["mse"].idxmin()]

    model = LeastSquaresARX(int(best["n_a"]), int(best["n_b"]))
    model.train(y, u)
    return BaselineResult(model=model, selection=selection)
