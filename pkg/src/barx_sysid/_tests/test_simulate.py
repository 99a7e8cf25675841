import numpy as np
import pytest

from barx_sysid.libs import (
    Dataset,
    ModelConfig,
    ParameterVector,
    build_regression,
    generate_experiment1,
    generate_experiment2,
    log_likelihood,
    split,
)
from barx_sysid.libs._simulate import (
    EXPERIMENT1_A,
    EXPERIMENT1_B,
    EXPERIMENT2_A,
    EXPERIMENT2_B,
    prbs,
)


def _true_residuals(ds, a, b):
    config = ModelConfig(n_a=len(a), n_b=len(b), n_e=1)
    data = build_regression(ds.y, ds.u, config)
    return data.residuals(np.concatenate((a, b)))


def test_experiment1_is_reproducible():
    first = generate_experiment1(T=300, seed=7)
    second = generate_experiment1(T=300, seed=7)
    np.testing.assert_array_equal(first.y, second.y)
    np.testing.assert_array_equal(first.u, second.u)
    assert not np.array_equal(first.y, generate_experiment1(T=300, seed=8).y)
    assert first.meta["seed"] == 7 and first.meta["generator"] == "experiment1"


def test_experiment1_noise_free_residuals_vanish():
    ds = generate_experiment1(T=200, seed=1, noise_scale=0.0)
    np.testing.assert_allclose(
        _true_residuals(ds, EXPERIMENT1_A, EXPERIMENT1_B), 0.0, atol=1e-10
    )


def test_experiment1_noise_variance():
    ds = generate_experiment1(T=100000, seed=3)
    residuals = _true_residuals(ds, EXPERIMENT1_A, EXPERIMENT1_B)
    assert np.var(residuals) == pytest.approx(1.0, rel=0.02)


def test_prbs_levels_and_holds():
    u = prbs(20000, np.random.default_rng(0))
    assert set(np.unique(u)) == {-1.0, 1.0}
    switches = np.count_nonzero(np.diff(u))
    assert len(u) / (switches + 1) == pytest.approx(5.0, rel=0.1)


def test_experiment2_noise_mean_and_modes():
    ds = generate_experiment2(T=100000, seed=4)
    residuals = _true_residuals(ds, EXPERIMENT2_A, EXPERIMENT2_B)
    assert residuals.mean() == pytest.approx(2.8, rel=0.02)
    high = residuals > 3.5
    assert high.mean() == pytest.approx(0.4, abs=0.01)
    assert residuals[high].mean() == pytest.approx(7.0, abs=0.05)
    assert np.median(residuals[~high]) == pytest.approx(0.0, abs=0.05)


def test_experiment2_is_reproducible():
    first = generate_experiment2(T=120, seed=5)
    np.testing.assert_array_equal(first.y, generate_experiment2(T=120, seed=5).y)
    assert first.meta["a"] == [0.0, -0.25, 0.2]


def test_generators_reject_short_series():
    with pytest.raises(ValueError):
        generate_experiment1(T=49)
    with pytest.raises(ValueError):
        generate_experiment2(T=10)


def test_true_parameters_beat_perturbations():
    ds = generate_experiment1(T=1000, seed=9)
    config = ModelConfig(n_a=2, n_b=3, n_e=1)
    data = build_regression(ds.y, ds.u, config)

    def loglik(coefficients):
        theta = ParameterVector(
            a=coefficients[:2], b=coefficients[2:], w=[1.0], mu=[0.0],
            sigma=[1.0], sigma_f=1.0, sigma_mu=1.0, e0=1.0,
        )
        return log_likelihood(theta, data)

    truth = np.concatenate((EXPERIMENT1_A, EXPERIMENT1_B))
    best = loglik(truth)
    for k in range(len(truth)):
        for delta in (-0.5, 0.5):
            perturbed = truth.copy()
            perturbed[k] += delta
            assert loglik(perturbed) < best


def test_split_sizes_and_concatenation():
    ds = Dataset(y=np.arange(999.0), u=np.ones(999))
    estimation, validation = split(ds, 2 / 3)
    assert (len(estimation), len(validation)) == (666, 333)
    np.testing.assert_array_equal(np.concatenate((estimation.y, validation.y)), ds.y)
    np.testing.assert_array_equal(np.concatenate((estimation.u, validation.u)), ds.u)
    assert validation.meta["offset"] == 666


def test_split_errors():
    ds = Dataset(y=np.arange(100.0))
    with pytest.raises(ValueError):
        split(ds, 0.999, order=5)
    with pytest.raises(ValueError):
        split(ds, 1.0)


def test_dataset_checks_lengths():
    with pytest.raises(ValueError):
        Dataset(y=np.zeros(5), u=np.zeros(4))
