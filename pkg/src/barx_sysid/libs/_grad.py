"""
Description: Analytic gradient of the unconstrained log-posterior and a central
finite-difference oracle to check it against.
"""

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.special import digamma, expit, logsumexp

from ._model import (
    ModelConfig,
    RegressionDataset,
    component_log_terms,
    log_posterior_unconstrained,
    log_prior,
    transform,
)


@dataclass
class GradientResult:
    value: float
    grad: np.ndarray


def _simplex_gradient(
    coef: np.ndarray, stick: np.ndarray, n_e: int
) -> np.ndarray:
    """
    Gradient of ``sum_k coef_k log w_k`` with respect to the stick-breaking
    coordinates.
    """
    x = stick - np.log(n_e - np.arange(1, n_e))
    z = expit(x)
    # mass of the later components, k > j
    tail = np.cumsum(coef[::-1])[::-1][1:]
    return coef[:-1] * (1.0 - z) - tail * z


def _log_jacobian_stick_gradient(stick: np.ndarray, n_e: int) -> np.ndarray:
    j = np.arange(1, n_e)
    x = stick - np.log(n_e - j)
    z = expit(x)
    return 1.0 - (n_e + 1 - j) * z


def log_jacobian_gradient(
    z: np.ndarray, config: ModelConfig
) -> Tuple[float, np.ndarray]:
    """Value and gradient of the transform's log-Jacobian alone."""
    _, log_jacobian = transform(z, config)
    s = config.slices()
    grad = np.zeros(config.dimension)
    grad[s["stick"]] = _log_jacobian_stick_gradient(
        z[s["stick"]], config.n_e
    )
    grad[s["sigma"]] = 1.0
    grad[[s["sigma_f"], s["sigma_mu"], s["e0"]]] = 1.0
    return log_jacobian, grad


def grad_log_posterior(
    z: np.ndarray, data: RegressionDataset, config: ModelConfig
) -> GradientResult:
    """
    Log-posterior and its gradient in the unconstrained space.

    The value is assembled from the same pieces as
    ``log_posterior_unconstrained`` so the two agree to rounding.
    """
    z = np.asarray(z, dtype=float)
    theta, log_jacobian = transform(z, config)
    s = config.slices()
    n_e = config.n_e
    scale = config.sigma_prior_scale

    beta = theta.coefficients
    residuals = data.residuals(beta)
    terms = component_log_terms(
        residuals, theta.log_weights, theta.mu, theta.sigma
    )
    row_log_density = logsumexp(terms, axis=1)
    value = (
        log_prior(theta, config) + float(np.sum(row_log_density)) + log_jacobian
    )

    # responsibilities, one row per residual
    resp = np.exp(terms - row_log_density[:, None])
    standardized = (residuals[:, None] - theta.mu) / theta.sigma
    pull = resp * standardized / theta.sigma

    grad = np.zeros(config.dimension)

    # coefficients: likelihood pull through phi plus the Gaussian prior
    sigma_f2 = theta.sigma_f**2
    grad[: config.n_coefficients] = (
        data.phi.T @ pull.sum(axis=1) - beta / sigma_f2
    )

    # component means
    sigma_mu2 = theta.sigma_mu**2
    grad[s["mu"]] = pull.sum(axis=0) - theta.mu / sigma_mu2

    # log component std-devs: likelihood, half-Cauchy, Jacobian
    ratio2 = (theta.sigma / scale) ** 2
    grad[s["sigma"]] = (
        np.sum(resp * (standardized**2 - 1.0), axis=0)
        - 2.0 * ratio2 / (1.0 + ratio2)
        + 1.0
    )

    # weights: counts from the likelihood, Dirichlet exponent, Jacobian
    if n_e > 1:
        counts = resp.sum(axis=0) + (theta.e0 - 1.0)
        stick = z[s["stick"]]
        grad[s["stick"]] = _simplex_gradient(
            counts, stick, n_e
        ) + _log_jacobian_stick_gradient(stick, n_e)

    # global coefficient scale
    n_c = config.n_coefficients
    grad[s["sigma_f"]] = (
        -n_c
        + np.sum(beta * beta) / sigma_f2
        - 2.0 * sigma_f2 / (1.0 + sigma_f2)
        + 1.0
    )

    # global mean scale
    grad[s["sigma_mu"]] = (
        -n_e
        + np.sum(theta.mu * theta.mu) / sigma_mu2
        - 2.0 * sigma_mu2 / (1.0 + sigma_mu2)
        + 1.0
    )

    # Dirichlet concentration: Dirichlet normalizer, Gamma prior, Jacobian
    e0 = theta.e0
    d_dirichlet = 0.0
    if n_e > 1:
        d_dirichlet = e0 * (
            n_e * digamma(n_e * e0)
            - n_e * digamma(e0)
            + np.sum(theta.log_weights)
        )
    alpha = config.alpha_w
    grad[s["e0"]] = d_dirichlet + (alpha - 1.0) - n_e * alpha * e0 + 1.0

    return GradientResult(value=value, grad=grad)


def finite_difference(
    func: Callable[[np.ndarray], float], z: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """
    Central-difference gradient of a scalar function.

    Parameters
    ----------
    func : callable
        Function of a real vector.
    z : np.ndarray
        Point of evaluation.
    h : float
        Step size.
    """
    if not h > 0:
        raise ValueError("step size should be positive")
    z = np.asarray(z, dtype=float)
    grad = np.zeros(len(z))
    for j in range(len(z)):
        x = z.copy()
        x[j] = z[j] + h
        f_plus = func(x)
        x[j] = z[j] - h
        f_minus = func(x)
        grad[j] = (f_plus - f_minus) / (2 * h)
    return grad


def finite_difference_gradient(
    z: np.ndarray,
    data: RegressionDataset,
    config: ModelConfig,
    h: float = 1e-5,
) -> np.ndarray:
    """Central differences of ``log_posterior_unconstrained``."""
    return finite_difference(
        lambda x: log_posterior_unconstrained(x, data, config), z, h
    )


class LogPosterior:
    """
    The model posterior as a sampler target: calling it returns the
    log-density and its gradient at an unconstrained point.
    """

    def __init__(self, data: RegressionDataset, config: ModelConfig):
        if data.phi.shape[1] != config.n_coefficients:
            raise ValueError(
                "regression width does not match the model orders"
            )
        self.data = data
        self.config = config

    @property
    def dimension(self) -> int:
        return self.config.dimension

    def __call__(self, z: np.ndarray) -> Tuple[float, np.ndarray]:
        result = grad_log_posterior(z, self.data, self.config)
        return result.value, result.grad
