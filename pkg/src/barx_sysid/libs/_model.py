"""
Description: Parameter space, transforms and log densities of the Bayesian ARX
model with Gaussian-mixture noise.
"""

from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

_LOG_2PI = np.log(2.0 * np.pi)
_LOG_2_OVER_PI = np.log(2.0 / np.pi)


@dataclass(frozen=True)
class ModelConfig:
    """
    Model orders and hyperprior settings.

    Parameters
    ----------
    n_a : int
        Maximum autoregressive order.
    n_b : int
        Maximum input order.
    n_e : int
        Maximum number of mixture components.
    alpha_w : float
        Shape of the Gamma hyperprior on the Dirichlet concentration.
    sigma_prior_scale : float
        Scale of the half-Cauchy prior on the component std-devs.
    """

    n_a: int = 5
    n_b: int = 5
    n_e: int = 5
    alpha_w: float = 10.0
    sigma_prior_scale: float = 5.0

    def __post_init__(self):
        if self.n_a < 0 or self.n_b < 0:
            raise ValueError("n_a and n_b should be non-negative")
        if self.n_a + self.n_b < 1:
            raise ValueError("n_a + n_b should be at least 1")
        if self.n_e < 1:
            raise ValueError("n_e should be at least 1")
        if not self.alpha_w > 0:
            raise ValueError("alpha_w should be positive")
        if not self.sigma_prior_scale > 0:
            raise ValueError("sigma_prior_scale should be positive")

    @property
    def order(self) -> int:
        """Number of observations consumed as initial regressors."""
        return max(self.n_a, self.n_b)

    @property
    def n_coefficients(self) -> int:
        return self.n_a + self.n_b

    @property
    def dimension(self) -> int:
        """Length of the unconstrained vector."""
        return self.n_coefficients + (self.n_e - 1) + 2 * self.n_e + 3

    def coefficient_names(self) -> list:
        return [f"a{k}" for k in range(1, self.n_a + 1)] + [
            f"b{k}" for k in range(1, self.n_b + 1)
        ]

    def slices(self) -> dict:
        """Positions of each parameter block inside the unconstrained vector."""
        n_c, n_e = self.n_coefficients, self.n_e
        stick = n_c + n_e - 1
        return {
            "a": slice(0, self.n_a),
            "b": slice(self.n_a, n_c),
            "stick": slice(n_c, stick),
            "mu": slice(stick, stick + n_e),
            "sigma": slice(stick + n_e, stick + 2 * n_e),
            "sigma_f": stick + 2 * n_e,
            "sigma_mu": stick + 2 * n_e + 1,
            "e0": stick + 2 * n_e + 2,
        }

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown model settings: {sorted(unknown)}")
        return cls(**values)


@dataclass
class ParameterVector:
    """
    The full set of model unknowns in their natural (constrained) space.

    ``log_w`` optionally carries the log-weights computed by ``transform`` so
    that weights which underflow to zero keep a finite log value.
    """

    a: np.ndarray
    b: np.ndarray
    w: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    sigma_f: float
    sigma_mu: float
    e0: float
    log_w: Optional[np.ndarray] = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        self.w = np.atleast_1d(np.asarray(self.w, dtype=float))
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        self.sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if not (len(self.w) == len(self.mu) == len(self.sigma)):
            raise ValueError("w, mu and sigma should have the same length")

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate((self.a, self.b))

    @property
    def log_weights(self) -> np.ndarray:
        if self.log_w is not None:
            return self.log_w
        with np.errstate(divide="ignore"):
            return np.log(self.w)

    @property
    def n_components(self) -> int:
        return len(self.w)

    def validate(self, strict: bool = False) -> "ParameterVector":
        """
        Check the parameter invariants.

        Parameters
        ----------
        strict : bool
            Also reject boundary values (zero or unit weights), which have no
            unconstrained counterpart.
        """
        if abs(np.sum(self.w) - 1.0) > 1e-12:
            raise ValueError("mixture weights should sum to one")
        if np.any(self.w < 0) or np.any(self.w > 1):
            raise ValueError("mixture weights should lie in [0, 1]")
        if strict and self.n_components > 1:
            if np.any(self.w <= 0) or np.any(self.w >= 1):
                raise ValueError(
                    "mixture weights on the simplex boundary cannot be "
                    "transformed"
                )
        if np.any(~(self.sigma > 0)):
            raise ValueError("component std-devs should be positive")
        for name in ("sigma_f", "sigma_mu", "e0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} should be positive")
        return self

    def permute(self, order: Sequence[int]) -> "ParameterVector":
        """Reorder the mixture components."""
        order = np.asarray(order)
        return ParameterVector(
            a=self.a.copy(),
            b=self.b.copy(),
            w=self.w[order],
            mu=self.mu[order],
            sigma=self.sigma[order],
            sigma_f=self.sigma_f,
            sigma_mu=self.sigma_mu,
            e0=self.e0,
            log_w=None if self.log_w is None else self.log_w[order],
        )

    def to_dict(self) -> dict:
        return {
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "w": self.w.tolist(),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "sigma_f": float(self.sigma_f),
            "sigma_mu": float(self.sigma_mu),
            "e0": float(self.e0),
        }


@dataclass
class RegressionDataset:
    """
    Lagged design matrix of an ARX model.

    Row ``i`` of ``phi`` belongs to the time index ``t[i]`` and holds
    ``[-y[t-1], ..., -y[t-n_a], u[t-1], ..., u[t-n_b]]``.
    """

    y: np.ndarray
    u: Optional[np.ndarray]
    phi: np.ndarray
    y_target: np.ndarray
    t: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.phi.shape[0]

    def residuals(self, coefficients: np.ndarray) -> np.ndarray:
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape[-1] != self.phi.shape[1]:
            raise ValueError(
                f"expected {self.phi.shape[1]} coefficients, "
                f"got {coefficients.shape[-1]}"
            )
        return self.y_target - self.phi @ coefficients


def build_regression(
    y: np.ndarray,
    u: Optional[np.ndarray],
    config: ModelConfig,
    first_target: Optional[int] = None,
) -> RegressionDataset:
    """
    Build the ARX regression rows for a series.

    Parameters
    ----------
    y : np.ndarray
        Output series.
    u : np.ndarray, optional
        Input series of the same length as ``y``.
    config : ModelConfig
        Supplies the orders ``n_a`` and ``n_b``.
    first_target : int, optional
        First time index to use as a target. Defaults to the model order;
        larger values keep the earlier samples as regressors only.

    Returns
    -------
    RegressionDataset
        Rows for ``t = max(p, first_target) .. T-1``.
    """
    y = np.asarray(y, dtype=float).ravel()
    if u is not None:
        u = np.asarray(u, dtype=float).ravel()
        if len(u) != len(y):
            raise ValueError(
                f"input and output lengths differ ({len(u)} != {len(y)})"
            )
    elif config.n_b > 0:
        raise ValueError(
            "no input series available but n_b > 0; set n_b to 0"
        )

    p = config.order
    if len(y) <= p:
        raise ValueError(
            f"series too short: {len(y)} samples for model order {p}"
        )
    start = p if first_target is None else max(p, int(first_target))
    if start >= len(y):
        raise ValueError(f"series too short: no targets after index {start}")

    t = np.arange(start, len(y))
    columns = [-y[t - k] for k in range(1, config.n_a + 1)]
    columns += [u[t - k] for k in range(1, config.n_b + 1)]
    phi = np.column_stack(columns) if columns else np.empty((len(t), 0))
    return RegressionDataset(y=y, u=u, phi=phi, y_target=y[t], t=t)


def component_log_terms(
    e: np.ndarray, log_w: np.ndarray, mu: np.ndarray, sigma: np.ndarray
) -> np.ndarray:
    """Weighted log-densities of every component, shape ``(len(e), n_e)``."""
    z = (np.asarray(e, dtype=float)[..., None] - mu) / sigma
    return log_w - np.log(sigma) - 0.5 * _LOG_2PI - 0.5 * z * z


def gmm_log_density(
    e, w: np.ndarray, mu: np.ndarray, sigma: np.ndarray
) -> np.ndarray:
    """
    Log-density of a Gaussian mixture.

    Parameters
    ----------
    e : float or np.ndarray
        Evaluation point(s).
    w, mu, sigma : np.ndarray
        Weights, means and std-devs of the components.

    Returns
    -------
    float or np.ndarray
        ``log sum_k w_k N(e; mu_k, sigma_k^2)``, same shape as ``e``.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if np.any(~(sigma > 0)):
        raise ValueError("component std-devs should be positive")
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    terms = component_log_terms(e, log_w, mu, sigma)
    return logsumexp(terms, axis=-1)


def log_likelihood(theta: ParameterVector, data: RegressionDataset) -> float:
    """
    Conditional log-likelihood of the regression targets.

    The first ``p`` observations only enter as regressors.
    """
    residuals = data.residuals(theta.coefficients)
    terms = component_log_terms(
        residuals, theta.log_weights, theta.mu, theta.sigma
    )
    return float(np.sum(logsumexp(terms, axis=1)))


def half_cauchy_log_density(x, scale: float = 1.0):
    """Log-density of the Cauchy distribution truncated to ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    return _LOG_2_OVER_PI - np.log(scale) - np.log1p((x / scale) ** 2)


def _normal_log_density(x: np.ndarray, scale: float) -> float:
    x = np.asarray(x, dtype=float)
    return float(
        -0.5 * len(x) * _LOG_2PI
        - len(x) * np.log(scale)
        - 0.5 * np.sum(x * x) / scale**2
    )


def dirichlet_log_density(log_w: np.ndarray, e0: float) -> float:
    """Symmetric Dirichlet log-density, evaluated from log-weights."""
    n_e = len(log_w)
    if n_e == 1:
        return 0.0
    return float(
        gammaln(n_e * e0) - n_e * gammaln(e0) + (e0 - 1.0) * np.sum(log_w)
    )


def gamma_log_density(x: float, shape: float, rate: float) -> float:
    """Gamma log-density in the shape-rate convention."""
    return float(
        shape * np.log(rate)
        - gammaln(shape)
        + (shape - 1.0) * np.log(x)
        - rate * x
    )


def log_prior(theta: ParameterVector, config: ModelConfig) -> float:
    """
    Log-prior density of the model parameters.

    Coefficients share a horseshoe-type Gaussian prior with a single global
    half-Cauchy scale ``sigma_f``; the component means get the same structure
    with ``sigma_mu``. Weights are Dirichlet with concentration ``e0`` whose
    Gamma hyperprior has mean ``1/n_e``.
    """
    n_e = config.n_e
    value = _normal_log_density(theta.coefficients, theta.sigma_f)
    value += float(half_cauchy_log_density(theta.sigma_f))
    value += _normal_log_density(theta.mu, theta.sigma_mu)
    value += float(half_cauchy_log_density(theta.sigma_mu))
    value += float(
        np.sum(half_cauchy_log_density(theta.sigma, config.sigma_prior_scale))
    )
    value += dirichlet_log_density(theta.log_weights, theta.e0)
    value += gamma_log_density(theta.e0, config.alpha_w, n_e * config.alpha_w)
    return value


def _stick_offsets(n_e: int) -> np.ndarray:
    # offsets put z = 0 at the simplex centre
    return np.log(n_e - np.arange(1, n_e))


def stick_breaking(y: np.ndarray, n_e: int) -> Tuple[np.ndarray, float]:
    """
    Map ``n_e - 1`` reals onto the simplex.

    Returns
    -------
    tuple
        Log-weights (length ``n_e``) and the log absolute Jacobian determinant.
    """
    if n_e == 1:
        return np.zeros(1), 0.0
    x = np.asarray(y, dtype=float) - _stick_offsets(n_e)
    log_z = -np.logaddexp(0.0, -x)
    log_1mz = -np.logaddexp(0.0, x)
    log_remaining = np.concatenate(([0.0], np.cumsum(log_1mz)))
    log_w = np.empty(n_e)
    log_w[:-1] = log_remaining[:-1] + log_z
    log_w[-1] = log_remaining[-1]
    log_jacobian = float(np.sum(log_w[:-1] + log_1mz))
    return log_w, log_jacobian


def inverse_stick_breaking(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    n_e = len(w)
    if n_e == 1:
        return np.empty(0)
    remaining = 1.0 - np.concatenate(([0.0], np.cumsum(w[:-2])))
    z = w[:-1] / remaining
    if np.any(z <= 0) or np.any(z >= 1):
        raise ValueError(
            "mixture weights on the simplex boundary cannot be transformed"
        )
    return np.log(z) - np.log1p(-z) + _stick_offsets(n_e)


def _check_dimension(z: np.ndarray, config: ModelConfig) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or len(z) != config.dimension:
        raise ValueError(
            f"unconstrained vector should have length {config.dimension}, "
            f"got shape {z.shape}"
        )
    return z


def transform(
    z: np.ndarray, config: ModelConfig
) -> Tuple[ParameterVector, float]:
    """
    Map an unconstrained vector to model parameters.

    Coefficients and means pass through, scales and ``e0`` are exponentiated,
    weights come from stick-breaking.

    Returns
    -------
    tuple
        The ``ParameterVector`` and the log absolute Jacobian determinant.
    """
    z = _check_dimension(z, config)
    s = config.slices()
    log_w, log_jacobian = stick_breaking(z[s["stick"]], config.n_e)
    log_scales = np.concatenate(
        (z[s["sigma"]], z[[s["sigma_f"], s["sigma_mu"], s["e0"]]])
    )
    log_jacobian += float(np.sum(log_scales))
    theta = ParameterVector(
        a=z[s["a"]].copy(),
        b=z[s["b"]].copy(),
        w=np.exp(log_w),
        mu=z[s["mu"]].copy(),
        sigma=np.exp(z[s["sigma"]]),
        sigma_f=float(np.exp(z[s["sigma_f"]])),
        sigma_mu=float(np.exp(z[s["sigma_mu"]])),
        e0=float(np.exp(z[s["e0"]])),
        log_w=log_w,
    )
    return theta, log_jacobian


def inverse_transform(
    theta: ParameterVector, config: ModelConfig
) -> np.ndarray:
    """Map model parameters back to the unconstrained space."""
    theta.validate(strict=True)
    if len(theta.a) != config.n_a or len(theta.b) != config.n_b:
        raise ValueError("coefficient lengths do not match the model orders")
    if theta.n_components != config.n_e:
        raise ValueError("number of components does not match n_e")
    return np.concatenate(
        (
            theta.a,
            theta.b,
            inverse_stick_breaking(theta.w),
            theta.mu,
            np.log(theta.sigma),
            np.log([theta.sigma_f, theta.sigma_mu, theta.e0]),
        )
    )


def log_posterior_unconstrained(
    z: np.ndarray, data: RegressionDataset, config: ModelConfig
) -> float:
    """Unnormalized log-posterior including the transform's log-Jacobian."""
    theta, log_jacobian = transform(z, config)
    return (
        log_prior(theta, config)
        + log_likelihood(theta, data)
        + log_jacobian
    )


def initialize(
    config: ModelConfig,
    data: RegressionDataset,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Starting point for a chain.

    Coefficients are uniform on ``(-1, 1)``, component means sit on an equally
    spaced grid over the output range, weights are equal and every scale
    parameter is one.
    """
    if data.n_rows == 0:
        raise ValueError("cannot initialise from an empty dataset")
    coefficients = rng.uniform(-1.0, 1.0, size=config.n_coefficients)
    mu = np.linspace(np.min(data.y), np.max(data.y), config.n_e)
    if config.n_e == 1:
        mu = np.array([0.5 * (np.min(data.y) + np.max(data.y))])
    return np.concatenate(
        (
            coefficients,
            np.zeros(config.n_e - 1),
            mu,
            np.zeros(config.n_e),
            np.zeros(3),
        )
    )
