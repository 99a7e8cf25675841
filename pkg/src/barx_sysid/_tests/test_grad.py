import numpy as np
import pytest

from barx_sysid.libs import (
    LogPosterior,
    ModelConfig,
    ParameterVector,
    build_regression,
    finite_difference,
    finite_difference_gradient,
    generate_experiment1,
    generate_experiment2,
    grad_log_posterior,
    inverse_transform,
    log_posterior_unconstrained,
    transform,
)
from barx_sysid.libs._grad import log_jacobian_gradient


def _problem(T=1000, n_a=5, n_b=5, n_e=5, seed=0):
    ds = generate_experiment1(T=T, seed=seed)
    config = ModelConfig(n_a=n_a, n_b=n_b, n_e=n_e)
    return build_regression(ds.y, ds.u, config), config


def _near_truth(config, rng):
    z = rng.normal(scale=0.3, size=config.dimension)
    s = config.slices()
    z[s["a"]] = np.pad([-1.5, 0.7], (0, config.n_a - 2)) + rng.normal(
        scale=0.05, size=config.n_a
    )
    z[s["b"]] = np.pad([0.0, 1.0, 0.5], (0, config.n_b - 3)) + rng.normal(
        scale=0.05, size=config.n_b
    )
    return z


def test_finite_difference_quadratic():
    z = np.array([0.3, -1.2, 2.0])
    np.testing.assert_allclose(
        finite_difference(lambda x: np.sum(x**2), z), 2 * z, atol=1e-8
    )
    with pytest.raises(ValueError):
        finite_difference(lambda x: np.sum(x**2), z, h=0.0)


def test_finite_difference_error_is_second_order():
    z = np.array([0.4, 1.1, -0.7])
    exact = np.cos(z)

    def error(h):
        return np.max(np.abs(finite_difference(lambda x: np.sum(np.sin(x)), z, h) - exact))

    ratio = error(1e-2) / error(1e-3)
    assert 50 < ratio < 200


def test_gradient_matches_finite_differences_near_truth():
    data, config = _problem()
    rng = np.random.default_rng(4)
    for _ in range(3):
        z = _near_truth(config, rng)
        grad = grad_log_posterior(z, data, config).grad
        numeric = finite_difference_gradient(z, data, config, h=1e-5)
        deviation = np.abs(grad - numeric) / np.maximum(1.0, np.abs(grad))
        assert deviation.max() < 1e-5


def test_gradient_matches_finite_differences_at_random_points():
    data, config = _problem()
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(25):
        z = rng.uniform(-1.0, 1.0, size=config.dimension)
        grad = grad_log_posterior(z, data, config).grad
        numeric = finite_difference_gradient(z, data, config, h=1e-5)
        deviation = np.abs(grad - numeric) / np.maximum(1.0, np.abs(grad))
        worst = max(worst, deviation.max())
    assert worst < 1e-5


def test_directional_derivatives_match_gradient():
    data, config = _problem(T=200, n_a=2, n_b=3, n_e=3)
    rng = np.random.default_rng(13)
    z = rng.normal(scale=0.5, size=config.dimension)
    grad = grad_log_posterior(z, data, config).grad
    h = 1e-5
    for _ in range(50):
        d = rng.standard_normal(config.dimension)
        d /= np.linalg.norm(d)
        numeric = (
            log_posterior_unconstrained(z + h * d, data, config)
            - log_posterior_unconstrained(z - h * d, data, config)
        ) / (2 * h)
        assert abs(numeric - grad @ d) <= 1e-4 * max(1.0, abs(grad @ d))


def test_coefficient_gradient_vanishes_at_symmetric_point():
    config = ModelConfig()
    data = build_regression(np.zeros(60), np.zeros(60), config)
    grad = grad_log_posterior(np.zeros(config.dimension), data, config).grad
    np.testing.assert_allclose(grad[: config.n_coefficients], 0.0, atol=1e-10)


def test_gradient_on_bimodal_noise_problem():
    ds = generate_experiment2(T=300, seed=1)
    config = ModelConfig(n_a=3, n_b=3, n_e=3)
    data = build_regression(ds.y, ds.u, config)
    z = np.random.default_rng(2).normal(scale=0.5, size=config.dimension)
    grad = grad_log_posterior(z, data, config).grad
    numeric = finite_difference_gradient(z, data, config)
    deviation = np.abs(grad - numeric) / np.maximum(1.0, np.abs(grad))
    assert deviation.max() < 1e-5


def test_gradient_value_matches_log_posterior():
    data, config = _problem(T=200, n_a=2, n_b=3, n_e=3)
    z = np.random.default_rng(5).normal(scale=0.5, size=config.dimension)
    result = grad_log_posterior(z, data, config)
    np.testing.assert_allclose(
        result.value, log_posterior_unconstrained(z, data, config), atol=1e-9
    )
    target = LogPosterior(data, config)
    value, grad = target(z)
    assert target.dimension == config.dimension
    np.testing.assert_allclose(value, result.value)
    np.testing.assert_allclose(grad, result.grad)


def test_single_component_coefficient_gradient_is_linear():
    data, config = _problem(T=200, n_a=2, n_b=3, n_e=1)
    rng = np.random.default_rng(6)
    z = np.zeros(config.dimension)
    z[: config.n_coefficients] = rng.normal(size=config.n_coefficients)
    beta = z[: config.n_coefficients]
    # unit std-devs, zero mean: d/dbeta = phi^T r - beta
    expected = data.phi.T @ (data.y_target - data.phi @ beta) - beta
    grad = grad_log_posterior(z, data, config).grad
    np.testing.assert_allclose(
        grad[: config.n_coefficients], expected, rtol=1e-10, atol=1e-8
    )


def test_gradient_permutes_with_components():
    data, config = _problem(T=200, n_a=2, n_b=3, n_e=3)
    theta = ParameterVector(
        a=[-1.4, 0.6], b=[0.1, 0.9, 0.4], w=[0.2, 0.3, 0.5],
        mu=[0.0, 1.0, -1.0], sigma=[1.0, 2.0, 0.5], sigma_f=0.8,
        sigma_mu=2.0, e0=0.3,
    )
    order = [2, 0, 1]
    s = config.slices()
    grad = grad_log_posterior(inverse_transform(theta, config), data, config).grad
    permuted = grad_log_posterior(
        inverse_transform(theta.permute(order), config), data, config
    ).grad
    np.testing.assert_allclose(
        permuted[: config.n_coefficients], grad[: config.n_coefficients], rtol=1e-9,
        atol=1e-9,
    )
    np.testing.assert_allclose(permuted[s["mu"]], grad[s["mu"]][order], rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(
        permuted[s["sigma"]], grad[s["sigma"]][order], rtol=1e-9, atol=1e-9
    )


def test_log_jacobian_gradient():
    config = ModelConfig(n_a=1, n_b=1, n_e=4)
    z = np.random.default_rng(7).normal(size=config.dimension)
    value, grad = log_jacobian_gradient(z, config)
    assert value == transform(z, config)[1]
    numeric = finite_difference(lambda x: transform(x, config)[1], z)
    np.testing.assert_allclose(grad, numeric, atol=1e-7)


def test_log_posterior_target_checks_width():
    data, _ = _problem(T=100, n_a=2, n_b=3, n_e=2)
    with pytest.raises(ValueError):
        LogPosterior(data, ModelConfig(n_a=1, n_b=1))
