import numpy as np
import pytest

from barx_sysid.libs import (
    HmcConfig,
    ModelConfig,
    build_regression,
    effective_sample_size,
    energy_bfmi,
    generate_experiment1,
    mcse_mean,
    parameter_diagnostics,
    run_chains,
    split_rhat,
    summarize,
)
from barx_sysid.libs._diagnostics import autocovariance


def _ar1(phi, n, rng, n_chains=1):
    x = np.zeros((n_chains, n))
    noise = rng.standard_normal((n_chains, n))
    for t in range(1, n):
        x[:, t] = phi * x[:, t - 1] + noise[:, t]
    return x


def test_split_rhat_near_one_for_iid_chains():
    chains = np.random.default_rng(0).standard_normal((4, 1000))
    assert split_rhat(chains) == pytest.approx(1.0, abs=0.01)


def test_split_rhat_detects_separated_chains():
    chains = np.random.default_rng(1).standard_normal((4, 500))
    chains[0] += 3.0
    assert split_rhat(chains) > 1.5


def test_split_rhat_detects_trend_within_one_chain_pair():
    rng = np.random.default_rng(2)
    trend = np.linspace(0.0, 5.0, 400)
    chains = np.vstack([trend, trend]) + 0.1 * rng.standard_normal((2, 400))
    assert split_rhat(chains) > 1.5


def test_split_rhat_constant_is_nan_with_warning():
    with pytest.warns(UserWarning, match="degenerate"):
        assert np.isnan(split_rhat(np.ones((2, 20))))


def test_split_rhat_input_checks():
    with pytest.raises(ValueError):
        split_rhat(np.zeros((1, 100)))
    with pytest.raises(ValueError):
        split_rhat(np.zeros((2, 3)))


def test_autocovariance_matches_direct_sum():
    x = np.random.default_rng(3).standard_normal(64)
    centered = x - x.mean()
    direct = [np.sum(centered[: 64 - k] * centered[k:]) / 64 for k in range(5)]
    np.testing.assert_allclose(autocovariance(x)[:5], direct, atol=1e-12)


def test_effective_sample_size_iid():
    x = np.random.default_rng(4).standard_normal(4000)
    assert effective_sample_size(x) == pytest.approx(4000, rel=0.2)


def test_effective_sample_size_ar1():
    rng = np.random.default_rng(5)
    x = _ar1(0.9, 20000, rng)
    # integrated autocorrelation time (1 + phi) / (1 - phi) = 19
    assert effective_sample_size(x) == pytest.approx(20000 / 19, rel=0.3)


def test_effective_sample_size_pools_chains():
    rng = np.random.default_rng(6)
    chains = rng.standard_normal((4, 1000))
    assert effective_sample_size(chains) == pytest.approx(4000, rel=0.2)


def test_effective_sample_size_constant_warns():
    with pytest.warns(UserWarning):
        assert np.isnan(effective_sample_size(np.full(50, 2.0)))


def test_mcse_mean_iid():
    x = np.random.default_rng(7).standard_normal(4000)
    assert mcse_mean(x) == pytest.approx(1 / np.sqrt(4000), rel=0.15)


def test_energy_bfmi_iid_is_two():
    energy = np.random.default_rng(8).standard_normal((2, 5000))
    np.testing.assert_allclose(energy_bfmi(energy), 2.0, rtol=0.1)


def test_summaries_of_a_short_run():
    ds = generate_experiment1(T=200, seed=8)
    model = ModelConfig(n_a=2, n_b=3, n_e=2)
    data = build_regression(ds.y, ds.u, model)
    draws = run_chains(
        data,
        model,
        HmcConfig(n_iterations=200, n_warmup=100, n_chains=2, seed=1, max_tree_depth=5),
    )
    table = parameter_diagnostics(draws)
    assert list(table.index) == ["a1", "a2", "b1", "b2", "b3", "sigma_f", "sigma_mu", "e0"]
    assert {"mean", "sd", "mcse", "ess", "rhat"} <= set(table.columns)
    report = summarize(draws)
    assert report["divergences"] == int(draws.stats["divergent"].sum())
    assert len(report["ebfmi"]) == 2
    assert 0 <= report["mean_accept_stat"] <= 1
    assert len(report["parameters"]) == 8
