import math

import numpy as np
import pytest

from betaddp.distributions import NumericalError, ParameterError
from betaddp.gaussian import GaussianModel, GaussianModelSpec
from betaddp.gibbs import MhTuning, Schedule, SliceGibbsSampler
from betaddp.prior import StickConstruction
from betaddp.var import (
    VarCoefficients,
    VarMixtureModel,
    VarModelSpec,
    fit_var_mixture,
    generate_var_regime_data,
    growth_transform,
    lag_matrix,
    residualize,
    sequential_predictive_density,
    update_var_coefficients,
    var_coefficient_posterior,
)


def test_growth_transform_examples():
    X = np.exp(np.arange(10.0))
    np.testing.assert_allclose(growth_transform(X), np.full(6, 4.0))
    np.testing.assert_allclose(growth_transform(np.full(8, 3.0)), np.zeros(4))
    assert growth_transform(np.array([1.0, 2.0, 4.0, 8.0, 16.0]))[0] == pytest.approx(math.log(16))
    with pytest.raises(ParameterError):
        growth_transform([1.0, 2.0, 0.0, 4.0, 5.0, 6.0])
    with pytest.raises(ParameterError):
        growth_transform([1.0, 2.0, 3.0, 4.0])


def test_lag_matrix_layout():
    Y1 = np.arange(1.0, 7.0)
    Y2 = 10 * Y1
    Z = lag_matrix(Y1, Y2, 2)
    assert Z.shape == (4, 4)
    np.testing.assert_array_equal(Z[0], [2.0, 1.0, 20.0, 10.0])
    np.testing.assert_array_equal(Z[-1], [5.0, 4.0, 50.0, 40.0])
    with pytest.raises(ParameterError):
        lag_matrix(Y1, Y2[:-1], 2)


def test_residualize_examples(rng):
    Y1, Y2 = rng.normal(size=20), rng.normal(size=20)
    r1, r2 = residualize(Y1, Y2, VarCoefficients.zeros(3), 3)
    np.testing.assert_array_equal(r1, Y1[3:])
    np.testing.assert_array_equal(r2, Y2[3:])
    ups = np.array([[1.0, 0.0], [0.0, 1.0]])
    d1, d2 = residualize(Y1, Y2, ups, 1)
    np.testing.assert_allclose(d1, np.diff(Y1))
    np.testing.assert_allclose(d2, np.diff(Y2))
    with pytest.raises(ParameterError):
        residualize(Y1, Y2, np.zeros((2, 3)), 2)


def test_coefficient_posterior_with_unit_variance_is_ols(rng):
    Z = rng.normal(size=(80, 4))
    y = Z @ np.array([0.5, -0.2, 0.1, 0.3]) + rng.normal(size=80)
    mean, cov = var_coefficient_posterior(Z, y, np.zeros(80), np.ones(80))
    np.testing.assert_allclose(mean, np.linalg.lstsq(Z, y, rcond=None)[0], atol=1e-8)
    np.testing.assert_allclose(cov, np.linalg.inv(Z.T @ Z), atol=1e-10)
    _, cov2 = var_coefficient_posterior(Z, y, np.zeros(80), np.full(80, 2.0))
    np.testing.assert_allclose(cov2, 2 * cov, rtol=1e-10)


def test_coefficient_posterior_subtracts_intercepts(rng):
    Z = rng.normal(size=(50, 2))
    mu = rng.normal(size=50)
    y = Z @ np.array([1.0, -1.0]) + mu
    mean, _ = var_coefficient_posterior(Z, y, mu, np.full(50, 0.3))
    np.testing.assert_allclose(mean, [1.0, -1.0], atol=1e-10)


def test_coefficient_posterior_rank_deficient(rng):
    Z = rng.normal(size=(30, 3))
    Z[:, 2] = Z[:, 0]
    with pytest.raises(NumericalError):
        var_coefficient_posterior(Z, rng.normal(size=30), np.zeros(30), np.ones(30))
    with pytest.raises(NumericalError):
        var_coefficient_posterior(rng.normal(size=(2, 3)), np.zeros(2), np.zeros(2), np.ones(2))


def test_coefficient_draws_have_posterior_moments(rng):
    Z = rng.normal(size=(40, 2))
    y = rng.normal(size=40)
    mean, cov = var_coefficient_posterior(Z, y, np.zeros(40), np.ones(40))
    draws = np.array([update_var_coefficients(Z, [y, y], [np.zeros(40)] * 2, [np.ones(40)] * 2, rng).upsilon1
                      for _ in range(20_000)])
    se = np.sqrt(np.diag(cov) / draws.shape[0])
    assert np.all(np.abs(draws.mean(0) - mean) < 4 * se)
    np.testing.assert_allclose(np.cov(draws.T), cov, rtol=0.05, atol=1e-4)


def test_model_defaults_to_ols(rng):
    Y1, Y2, _, _ = generate_var_regime_data(120, 2, rng)
    m = VarMixtureModel(VarModelSpec(p=2), Y1, Y2)
    np.testing.assert_allclose(m.upsilon, m.ols())
    assert m.series_data().sizes == (118, 118)
    with pytest.raises(ParameterError):
        VarModelSpec(p=0)


def test_frozen_zero_coefficients_reduce_to_gaussian_mixture(rng):
    Y1, Y2, _, _ = generate_var_regime_data(60, 2, rng)
    spec = VarModelSpec(zeta=(1.0,) * 4, p=2)
    var_model = VarMixtureModel(spec, Y1, Y2, upsilon=VarCoefficients.zeros(2), freeze_upsilon=True)
    c = StickConstruction("H1", 2, (1.0, 1.0))
    sched = Schedule(sweeps=40, burn_in=10, seed=8)
    a = SliceGibbsSampler(c, var_model, var_model.series_data()).run(sched)
    g = SliceGibbsSampler(c, GaussianModel(GaussianModelSpec(spec.s2, spec.lam, spec.zeta)),
                          var_model.series_data()).run(sched)
    for ra, rg in zip(a.records, g.records):
        ra = {k: v for k, v in ra.items() if k != "upsilon"}
        assert ra == rg


def test_generated_data_roundtrip_identity(rng):
    Y1, Y2, s1, ups = generate_var_regime_data(200, 4, rng)
    r1, r2 = residualize(Y1, Y2, ups, 4)
    # residuals are the regime intercepts plus noise
    mu1 = np.where(s1[4:] == 0, 1.0, -3.0)
    assert abs(np.mean(r1 - mu1)) < 0.15
    assert abs(np.mean(r2) - 1.0) < 0.15
    assert set(np.unique(s1)) == {0, 1}
    with pytest.raises(ParameterError):
        generate_var_regime_data(50, 2, None)


def test_fit_and_sequential_predictive(rng):
    Y1, Y2, _, _ = generate_var_regime_data(80, 2, rng)
    spec = VarModelSpec(zeta=(1.0,) * 4, p=2)
    archive, model = fit_var_mixture(Y1, Y2, spec, Schedule(sweeps=60, burn_in=30, seed=2))
    rec = archive.records[-1]
    assert np.asarray(rec["upsilon"]).shape == (2, 4)
    grid = np.linspace(-10, 8, 400)
    dens = sequential_predictive_density(archive, Y1, Y2, 2, grid, 1)
    assert dens.shape == (78, 400)
    np.testing.assert_allclose(np.trapezoid(dens, grid, axis=1), 1.0, atol=1e-3)
