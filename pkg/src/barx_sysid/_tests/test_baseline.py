import numpy as np
import pytest

from barx_sysid.libs import (
    LeastSquaresARX,
    generate_experiment1,
    ls_arx_baseline,
    model_fit,
    split,
)
from barx_sysid.libs._baseline import default_order_grid


def test_default_order_grid():
    grid = default_order_grid()
    assert len(grid) == 25 and (1, 1) in grid and (5, 5) in grid
    assert default_order_grid(has_input=False) == [(k, 0) for k in range(1, 6)]


def test_noise_free_data_recovers_coefficients():
    ds = generate_experiment1(T=400, seed=1, noise_scale=0.0)
    result = ls_arx_baseline(ds.y, ds.u, [(1, 1), (2, 1), (2, 3)])
    assert result.orders == (2, 3)
    np.testing.assert_allclose(
        result.model.coefficients, [-1.5, 0.7, 0.0, 1.0, 0.5], atol=1e-6
    )
    assert not result.model.ridge
    assert set(result.selection.columns) == {"n_a", "n_b", "mse", "ridge"}


def test_order_selection_on_noisy_data():
    ds = generate_experiment1(T=1000, seed=2)
    estimation, validation = split(ds, 2 / 3)
    result = ls_arx_baseline(estimation.y, estimation.u)
    assert len(result.selection) == 25
    offset = validation.meta["offset"]
    prediction = result.predict(ds.y, ds.u, first_target=offset)
    assert len(prediction) == len(validation)
    assert model_fit(validation.y, prediction) > 90


def test_ridge_fallback_for_rank_deficient_regressors():
    y = np.sin(np.arange(60) / 5.0)
    u = np.zeros(60)
    model = LeastSquaresARX(n_a=2, n_b=2)
    with pytest.warns(UserWarning, match="ridge"):
        model.train(y, u)
    assert model.ridge
    assert np.all(np.isfinite(model.coefficients))
    assert model.to_dict()["ridge"] is True


def test_baseline_input_checks():
    y = np.random.default_rng(0).standard_normal(50)
    with pytest.raises(ValueError, match="n_b = 0"):
        ls_arx_baseline(y, None, [(1, 1)])
    with pytest.raises(ValueError):
        ls_arx_baseline(y, None, [])
    with pytest.raises(ValueError, match="too short"):
        ls_arx_baseline(y[:8], None, [(5, 0)])
    with pytest.raises(ValueError, match="not trained"):
        LeastSquaresARX().predict(y)


def test_output_only_model():
    rng = np.random.default_rng(3)
    y = np.zeros(500)
    for t in range(1, 500):
        y[t] = 0.8 * y[t - 1] + rng.standard_normal()
    result = ls_arx_baseline(y, None, default_order_grid(has_input=False))
    assert result.orders[1] == 0
    # a1 carries the sign flip of the regressor convention
    assert result.model.coefficients[0] == pytest.approx(-0.8, abs=0.1)


def test_score_is_mean_squared_residual():
    ds = generate_experiment1(T=300, seed=4)
    model = LeastSquaresARX(n_a=2, n_b=3).train(ds.y, ds.u)
    residuals = model.residuals(ds.y, ds.u)
    assert model.score(ds.y, ds.u) == pytest.approx(np.mean(residuals**2))
    np.testing.assert_allclose(
        model.predict(ds.y, ds.u) + residuals, ds.y[len(ds.y) - len(residuals):]
    )
