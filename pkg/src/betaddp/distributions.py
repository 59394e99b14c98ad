"""Random variate generation and log-densities for the laws used by the sampler.

Every sampler takes a :class:`numpy.random.Generator` as its random stream.
Beta variates are built from a ratio of gamma variates computed in log space,
so shapes far below one (``Beta(1 - l, .)`` with ``l`` close to one, or
``Gamma(0.01, .)`` hyperpriors) do not underflow to ``0/0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import betaln, expit, gammaln, xlog1py, xlogy

__all__ = [
    "ParameterError",
    "NumericalError",
    "IncompatibleChainError",
    "BetaParams",
    "GammaParams",
    "NormalInverseGammaParams",
    "make_rng",
    "sample_log_gamma",
    "sample_gamma",
    "sample_beta",
    "sample_normal",
    "sample_inverse_gamma",
    "sample_mvnormal",
    "beta_moment",
    "beta_mean",
    "beta_variance",
    "product_beta_law",
    "beta_logpdf",
    "gamma_logpdf",
    "normal_logpdf",
    "inverse_gamma_logpdf",
]

_TINY = np.nextafter(0.0, 1.0)
_ONE_MINUS = np.nextafter(1.0, 0.0)
CHAIN_TOL = 1e-12


class ParameterError(ValueError):
    """Invalid distribution parameter."""


class NumericalError(ArithmeticError):
    """Numerical failure (non-SPD matrix, weight underflow, empty candidate set)."""


class IncompatibleChainError(ValueError):
    """A chain of beta laws breaks the ``a[i+1] == a[i] + b[i]`` condition."""

    def __init__(self, link: int, expected: float, got: float):
        self.link = link
        self.expected = expected
        self.got = got
        super().__init__(
            f"link {link}: next shape a must equal {expected!r}, got {got!r}"
        )


def _check_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ParameterError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float

    def __post_init__(self):
        _check_positive("a", self.a)
        _check_positive("b", self.b)


@dataclass(frozen=True)
class GammaParams:
    """Gamma law parameterised by shape and rate (mean ``shape / rate``)."""

    shape: float
    rate: float

    def __post_init__(self):
        _check_positive("shape", self.shape)
        _check_positive("rate", self.rate)

    @property
    def mean(self):
        return self.shape / self.rate

    @property
    def variance(self):
        return self.shape / self.rate**2


@dataclass(frozen=True)
class NormalInverseGammaParams:
    """Base measure N(0, 1/s2) x IG(ig_shape, ig_rate) for a (mean, variance) atom."""

    s2: float
    ig_shape: float
    ig_rate: float

    def __post_init__(self):
        _check_positive("s2", self.s2)
        _check_positive("ig_shape", self.ig_shape)
        _check_positive("ig_rate", self.ig_rate)


def make_rng(seed) -> np.random.Generator:
    """Return a PCG64 generator; ``seed`` may be an int or a SeedSequence."""
    if seed is None:
        raise ParameterError("an explicit seed is required")
    return np.random.default_rng(seed)


def sample_log_gamma(shape, rng: np.random.Generator, size=None):
    """Draw ``log G`` with ``G ~ Gamma(shape, 1)``.

    For ``shape < 1`` uses ``G = G' * U**(1/shape)`` with ``G' ~ Gamma(shape + 1)``,
    evaluated in log space.
    """
    shape = np.asarray(shape, dtype=float)
    _check_positive("shape", shape)
    if size is None:
        size = shape.shape
    small = shape < 1.0
    boosted = np.where(small, shape + 1.0, shape)
    g = rng.standard_gamma(np.broadcast_to(boosted, size))
    u = rng.random(size)
    out = np.log(g) + np.where(small, np.log(u) / shape, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def sample_gamma(shape, rate, rng: np.random.Generator, size=None):
    """Draw from Gamma(shape, rate); mean is ``shape / rate``."""
    _check_positive("rate", rate)
    return np.exp(sample_log_gamma(shape, rng, size)) / np.asarray(rate, dtype=float)


def sample_beta(a, b, rng: np.random.Generator, size=None):
    """Draw from Beta(a, b) as ``Ga / (Ga + Gb)``; results lie strictly in (0, 1)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if size is None:
        size = np.broadcast_shapes(a.shape, b.shape)
    la = sample_log_gamma(a, rng, size)
    lb = sample_log_gamma(b, rng, size)
    x = np.clip(expit(np.asarray(la) - np.asarray(lb)), _TINY, _ONE_MINUS)
    if x.ndim == 0:
        return float(x)
    return x


def sample_normal(mean, var, rng: np.random.Generator, size=None):
    _check_positive("var", var)
    return rng.normal(mean, np.sqrt(var), size)


def sample_inverse_gamma(shape, rate, rng: np.random.Generator, size=None):
    """Draw from IG(shape, rate), density proportional to x^(-shape-1) exp(-rate/x)."""
    _check_positive("rate", rate)
    return np.exp(np.log(rate) - sample_log_gamma(shape, rng, size))


def sample_mvnormal(mean, cov, rng: np.random.Generator, size=None):
    """Multivariate normal via the Cholesky factor of ``cov``."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (mean.size, mean.size):
        raise ParameterError(f"covariance shape {cov.shape} does not match mean")
    if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
        raise NumericalError("covariance is not symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("covariance is not positive definite") from exc
    shape = (mean.size,) if size is None else tuple(np.atleast_1d(size)) + (mean.size,)
    z = rng.standard_normal(shape)
    return mean + z @ chol.T


def beta_moment(params: BetaParams, order: int) -> float:
    """Raw moment ``E[Z**order]`` of ``Z ~ Beta(a, b)``."""
    if int(order) != order or order < 0:
        raise ParameterError(f"order must be a non-negative integer, got {order!r}")
    out = 1.0
    for j in range(int(order)):
        out *= (params.a + j) / (params.a + params.b + j)
    return out


def beta_mean(params: BetaParams) -> float:
    return params.a / (params.a + params.b)


def beta_variance(params: BetaParams) -> float:
    s = params.a + params.b
    return params.a * params.b / (s * s * (s + 1.0))


def product_beta_law(chain: Sequence[BetaParams]) -> BetaParams:
    """Law of the product of independent betas ``U_1 ... U_p``.

    The product is ``Beta(a_1, b_1 + ... + b_p)`` when ``a_{i+1} = a_i + b_i``
    holds for every link (absolute tolerance 1e-12). Otherwise
    :class:`IncompatibleChainError` names the first broken link (1-based).
    """
    chain = list(chain)
    if not chain:
        raise ParameterError("chain must contain at least one beta law")
    for i in range(len(chain) - 1):
        expected = chain[i].a + chain[i].b
        if abs(chain[i + 1].a - expected) > CHAIN_TOL:
            raise IncompatibleChainError(i + 1, expected, chain[i + 1].a)
    return BetaParams(chain[0].a, sum(p.b for p in chain))


def beta_logpdf(x, a, b):
    """Natural-log Beta(a, b) density.

    At the endpoints the value is the limit of the density: ``-inf`` where the
    exponent is positive, ``+inf`` where it is negative, finite where it is zero.
    Outside [0, 1] the result is ``-inf``.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = xlogy(a - 1.0, x) + xlog1py(b - 1.0, -x) - betaln(a, b)
        out = np.where((x == 0.0) & (a < 1.0), np.inf, out)
        out = np.where((x == 1.0) & (b < 1.0), np.inf, out)
        out = np.where((x < 0.0) | (x > 1.0), -np.inf, out)
    return out if out.ndim else float(out)


def gamma_logpdf(x, shape, rate):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = shape * np.log(rate) - gammaln(shape) + xlogy(shape - 1.0, x) - rate * x
        out = np.where(x < 0.0, -np.inf, out)
    return out if out.ndim else float(out)


def normal_logpdf(x, mean, var):
    x = np.asarray(x, dtype=float)
    out = -0.5 * np.log(2.0 * np.pi * var) - 0.5 * (x - mean) ** 2 / var
    return out if np.ndim(out) else float(out)


def inverse_gamma_logpdf(x, shape, rate):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = shape * np.log(rate) - gammaln(shape) - (shape + 1.0) * np.log(x) - rate / x
        out = np.where(x <= 0.0, -np.inf, out)
    return out if out.ndim else float(out)
