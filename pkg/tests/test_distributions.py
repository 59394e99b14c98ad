import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from betaddp.distributions import (
    BetaParams,
    GammaParams,
    IncompatibleChainError,
    NumericalError,
    ParameterError,
    beta_logpdf,
    beta_mean,
    beta_moment,
    beta_variance,
    gamma_logpdf,
    inverse_gamma_logpdf,
    make_rng,
    normal_logpdf,
    product_beta_law,
    sample_beta,
    sample_gamma,
    sample_inverse_gamma,
    sample_mvnormal,
    sample_normal,
)
from conftest import mc_within

N = 100_000


def test_beta11_is_uniform(rng):
    assert mc_within(sample_beta(1.0, 1.0, rng, N), 0.5)


def test_beta21_mean(rng):
    assert mc_within(sample_beta(2.0, 1.0, rng, N), 2 / 3)


def test_beta_second_moment_of_dp_stick(rng):
    x = sample_beta(1.0, 2.0, rng, N)
    assert mc_within(x**2, 1 / 6)


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (1.0, -2.0), (np.nan, 1.0), (np.inf, 1.0)])
def test_sample_beta_rejects_bad_shapes(a, b, rng):
    with pytest.raises(ParameterError):
        sample_beta(a, b, rng)


def test_beta_params_validation():
    with pytest.raises(ParameterError):
        BetaParams(5.0, 0.0)
    with pytest.raises(ParameterError):
        GammaParams(1.0, 0.0)


def test_sample_beta_tiny_shapes_stay_inside_unit_interval(rng):
    x = sample_beta(1e-3, 1e-3, rng, 10_000)
    assert np.all((x > 0) & (x < 1))
    # Beta(a, a) with small a splits its mass evenly near the two ends
    assert abs(np.mean(x > 0.5) - 0.5) < 0.02


def test_sampling_is_deterministic_given_seed():
    a = sample_beta(0.7, 2.3, make_rng(9), 50)
    b = sample_beta(0.7, 2.3, make_rng(9), 50)
    np.testing.assert_array_equal(a, b)


def test_make_rng_requires_seed():
    with pytest.raises(ParameterError):
        make_rng(None)


def test_beta_moment_examples():
    assert beta_moment(BetaParams(1, 2), 1) == pytest.approx(1 / 3)
    assert beta_moment(BetaParams(1, 2), 2) == pytest.approx(1 / 6)
    assert beta_moment(BetaParams(1, 2), 0) == 1.0
    with pytest.raises(ParameterError):
        beta_moment(BetaParams(1, 2), 1.5)


@given(st.floats(0.05, 20), st.floats(0.05, 20))
def test_beta_moments_agree_with_mean_and_variance(a, b):
    p = BetaParams(a, b)
    assert beta_moment(p, 1) == pytest.approx(beta_mean(p))
    assert beta_moment(p, 2) - beta_moment(p, 1) ** 2 == pytest.approx(beta_variance(p), rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (1.0, 3.0), (4.0, 1.5)])
def test_beta_moments_match_large_sample(a, b):
    rng = np.random.default_rng(int(a * 100 + b))
    x = sample_beta(a, b, rng, 1_000_000)
    p = BetaParams(a, b)
    assert mc_within(x, beta_moment(p, 1), 4)
    assert mc_within(x**2, beta_moment(p, 2), 4)


def test_product_beta_law_examples():
    a1, a2 = 1.3, 0.7
    assert product_beta_law([BetaParams(1, a1), BetaParams(1 + a1, a2)]) == BetaParams(1, a1 + a2)
    l, k = 0.25, 3
    got = product_beta_law([BetaParams(1 - l, a1), BetaParams(1 - l + a1, a2 + l * k)])
    assert got.a == pytest.approx(1 - l) and got.b == pytest.approx(a1 + a2 + l * k)


def test_product_beta_law_reports_first_broken_link():
    with pytest.raises(IncompatibleChainError) as err:
        product_beta_law([BetaParams(1, 1), BetaParams(3, 1)])
    assert err.value.link == 1
    assert err.value.expected == 2
    with pytest.raises(IncompatibleChainError) as err:
        product_beta_law([BetaParams(1, 1), BetaParams(2, 1), BetaParams(4, 1)])
    assert err.value.link == 2


def test_product_beta_law_empty_chain():
    with pytest.raises(ParameterError):
        product_beta_law([])


@given(st.lists(st.floats(0.1, 5), min_size=1, max_size=5), st.floats(0.1, 5))
def test_product_beta_law_sums_b(bs, a1):
    chain, a = [], a1
    for b in bs:
        chain.append(BetaParams(a, b))
        a += b
    out = product_beta_law(chain)
    assert out.a == a1 and out.b == pytest.approx(sum(bs))


def test_product_of_betas_matches_law_by_ks(rng):
    chain = [BetaParams(0.8, 1.2), BetaParams(2.0, 0.5), BetaParams(2.5, 3.0)]
    prod = np.prod([sample_beta(p.a, p.b, rng, N) for p in chain], axis=0)
    law = product_beta_law(chain)
    ref = sample_beta(law.a, law.b, rng, N)
    assert stats.ks_2samp(prod, ref).pvalue > 0.01


def test_inverse_gamma_mean(rng):
    assert mc_within(sample_inverse_gamma(2.0, 1.0, rng, N)[: N // 10], 1.0)
    # the IG(2, 1) variance is infinite, so also check the median
    assert abs(np.median(sample_inverse_gamma(2.0, 1.0, rng, N)) - stats.invgamma(2.0).median()) < 0.01


def test_gamma_random_walk_proposal_mean(rng):
    x, kappa = 2.0, 10.0
    assert mc_within(sample_gamma(kappa * x**2, kappa * x, rng, N), x)


def test_mvnormal_identity(rng):
    z = sample_mvnormal(np.zeros(3), np.eye(3), rng, N)
    assert z.shape == (N, 3)
    for j in range(3):
        assert mc_within(z[:, j] ** 2, 1.0)


def test_mvnormal_rejects_non_spd(rng):
    with pytest.raises(NumericalError):
        sample_mvnormal(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]), rng)
    with pytest.raises(NumericalError):
        sample_mvnormal(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]), rng)


def test_sample_normal(rng):
    assert mc_within(sample_normal(3.0, 4.0, rng, N), 3.0)
    with pytest.raises(ParameterError):
        sample_normal(0.0, 0.0, rng)


def test_logpdfs_match_scipy():
    x = np.linspace(0.05, 0.95, 7)
    np.testing.assert_allclose(beta_logpdf(x, 0.7, 2.2), stats.beta(0.7, 2.2).logpdf(x))
    np.testing.assert_allclose(gamma_logpdf(x, 3.0, 2.0), stats.gamma(3.0, scale=0.5).logpdf(x))
    np.testing.assert_allclose(inverse_gamma_logpdf(x, 2.5, 1.5), stats.invgamma(2.5, scale=1.5).logpdf(x))
    np.testing.assert_allclose(normal_logpdf(x, 0.3, 2.0), stats.norm(0.3, math.sqrt(2.0)).logpdf(x))


def test_beta_logpdf_boundaries():
    assert beta_logpdf(0.0, 2.0, 2.0) == -np.inf
    assert beta_logpdf(0.0, 0.5, 2.0) == np.inf
    assert beta_logpdf(1.0, 2.0, 0.5) == np.inf
    assert beta_logpdf(0.0, 1.0, 2.0) == pytest.approx(math.log(2.0))
    assert beta_logpdf(1.5, 2.0, 2.0) == -np.inf
