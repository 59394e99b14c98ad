"""Mixture-of-VAR model: regime-dependent intercept and volatility.

Each series follows ``Y_it = mu_it + Z_t' Upsilon_i + sigma_it * eps_it`` where
``Z_t = (Y_1,t-1..t-p, Y_2,t-1..t-p)`` and the pairs ``(mu_it, sigma2_it)`` are
allocated through the dependent stick-breaking prior. The coefficients
``Upsilon_i`` are global, carry a flat prior, and are refreshed once per sweep
after the mixture blocks. The first ``p`` points of each series are conditioned
on, not modelled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import NumericalError, ParameterError, sample_mvnormal
from .gaussian import GaussianModel, GaussianModelSpec
from .gibbs import MhTuning, Schedule, SeriesData, SliceGibbsSampler
from .prior import StickConstruction

__all__ = [
    "VarModelSpec",
    "VarCoefficients",
    "growth_transform",
    "lag_matrix",
    "residualize",
    "var_coefficient_posterior",
    "update_var_coefficients",
    "VarMixtureModel",
    "generate_var_regime_data",
    "fit_var_mixture",
    "sequential_predictive_density",
]


@dataclass(frozen=True)
class VarModelSpec(GaussianModelSpec):
    p: int = 4

    def __post_init__(self):
        super().__post_init__()
        if int(self.p) != self.p or self.p < 1:
            raise ParameterError(f"lag order p must be a positive integer, got {self.p!r}")


@dataclass
class VarCoefficients:
    upsilon1: np.ndarray
    upsilon2: np.ndarray

    def as_array(self):
        return np.vstack([self.upsilon1, self.upsilon2])

    @classmethod
    def zeros(cls, p):
        return cls(np.zeros(2 * p), np.zeros(2 * p))


def growth_transform(X, horizon=4):
    """``Y_t = log X_t - log X_{t-horizon}``; the output is ``horizon`` shorter."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 1 or X.size <= horizon:
        raise ParameterError(f"need a 1-d series longer than {horizon}, got shape {X.shape}")
    if np.any(~np.isfinite(X)) or np.any(X <= 0):
        raise ParameterError("growth transform needs strictly positive levels")
    logx = np.log(X)
    return logx[horizon:] - logx[:-horizon]


def lag_matrix(Y1, Y2, p):
    """Rows ``Z_t`` for ``t = p+1..T``: own lags of series 1, then of series 2."""
    Y1 = np.asarray(Y1, dtype=float)
    Y2 = np.asarray(Y2, dtype=float)
    if Y1.shape != Y2.shape or Y1.ndim != 1:
        raise ParameterError(f"series lengths differ: {Y1.shape} vs {Y2.shape}")
    T = Y1.size
    if T <= p:
        raise ParameterError(f"need more than p={p} observations, got {T}")
    cols = [Y1[p - l : T - l] for l in range(1, p + 1)] + [Y2[p - l : T - l] for l in range(1, p + 1)]
    return np.column_stack(cols)


def _as_upsilon(upsilon, p):
    if isinstance(upsilon, VarCoefficients):
        upsilon = upsilon.as_array()
    upsilon = np.asarray(upsilon, dtype=float)
    if upsilon.shape != (2, 2 * p):
        raise ParameterError(f"Upsilon must have shape (2, {2 * p}), got {upsilon.shape}")
    return upsilon


def residualize(Y1, Y2, upsilon, p):
    """Residuals ``Y_it - Z_t' Upsilon_i`` for ``t = p+1..T``, one array per series."""
    Z = lag_matrix(Y1, Y2, p)
    ups = _as_upsilon(upsilon, p)
    fitted = Z @ ups.T
    return np.asarray(Y1)[p:] - fitted[:, 0], np.asarray(Y2)[p:] - fitted[:, 1]


def var_coefficient_posterior(Z, y, mu, sigma2):
    """Mean and covariance of ``Upsilon_i`` under a flat prior (weighted least squares)."""
    Z = np.asarray(Z, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if Z.shape[0] < Z.shape[1]:
        raise NumericalError(f"only {Z.shape[0]} usable points for {Z.shape[1]} coefficients")
    rank = np.linalg.matrix_rank(Z)
    if rank < Z.shape[1]:
        raise NumericalError(f"lag design has rank {rank} < {Z.shape[1]}; coefficients are not identified")
    wz = Z / sigma2[:, None]
    prec = Z.T @ wz
    rhs = wz.T @ (np.asarray(y, dtype=float) - np.asarray(mu, dtype=float))
    chol = np.linalg.cholesky(prec)
    mean = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
    inv_chol = np.linalg.solve(chol, np.eye(prec.shape[0]))
    cov = inv_chol.T @ inv_chol
    return mean, 0.5 * (cov + cov.T)


def update_var_coefficients(Z, targets, mus, sigma2s, rng) -> VarCoefficients:
    """Draw ``Upsilon_1, Upsilon_2`` independently from their normal full conditionals.

    ``targets[i]``, ``mus[i]`` and ``sigma2s[i]`` are aligned with the rows of ``Z``.
    """
    draws = []
    for y, mu, s2 in zip(targets, mus, sigma2s):
        mean, cov = var_coefficient_posterior(Z, y, mu, s2)
        draws.append(sample_mvnormal(mean, cov, rng))
    return VarCoefficients(*draws)


class VarMixtureModel(GaussianModel):
    """Gaussian mixture on VAR residuals with a Gibbs block for ``Upsilon``.

    The sampler sees the residuals ``Y_it - Z_t' Upsilon_i`` as observations.
    With ``freeze_upsilon=True`` and zero coefficients this is exactly the
    Gaussian mixture on ``Y[p:]``.
    """

    def __init__(self, spec: VarModelSpec, Y1, Y2, upsilon=None, freeze_upsilon=False):
        super().__init__(spec)
        self.p = spec.p
        self.Y1 = np.asarray(Y1, dtype=float)
        self.Y2 = np.asarray(Y2, dtype=float)
        self.Z = lag_matrix(self.Y1, self.Y2, self.p)
        self.freeze_upsilon = freeze_upsilon
        if upsilon is None:
            upsilon = self.ols()
        self.upsilon = _as_upsilon(upsilon, self.p).copy()

    def targets(self):
        return self.Y1[self.p :], self.Y2[self.p :]

    def series_data(self):
        return SeriesData.from_series(*self.targets())

    def ols(self):
        """Least-squares coefficients, used as the starting point."""
        return np.vstack([np.linalg.lstsq(self.Z, y, rcond=None)[0] for y in self.targets()])

    def observations(self, data):
        fitted = self.Z @ self.upsilon.T
        return data.y - np.concatenate([fitted[:, 0], fitted[:, 1]])

    def after_sweep(self, state, data, rng):
        if self.freeze_upsilon:
            return None
        atoms = state.atoms[state.D - 1]
        mus = data.split(atoms[:, 0])
        s2s = data.split(atoms[:, 1])
        self.upsilon = update_var_coefficients(self.Z, self.targets(), mus, s2s, rng).as_array()
        return None

    def record_extra(self):
        return {"upsilon": [[float(v) for v in row] for row in self.upsilon]}


def generate_var_regime_data(T=300, p=4, rng=None, stay=0.5, burn=100):
    """Two series with shared VAR dynamics; series 1 switches between two regimes.

    Regime 0 is ``(mu, sigma2) = (1.0, 0.25)``, regime 1 is ``(-3.0, 0.5)``. Series 2
    stays in regime 0. Returns ``(Y1, Y2, regimes1, upsilon)``.
    """
    if rng is None:
        raise ParameterError("an explicit random generator is required")
    regimes = np.array([[1.0, 0.25], [-3.0, 0.5]])
    upsilon = np.zeros((2, 2 * p))
    upsilon[0, 0], upsilon[0, p] = 0.3, 0.1
    upsilon[1, p], upsilon[1, 0] = 0.25, 0.05
    upsilon[0, 1] = upsilon[1, p + 1] = 0.1
    n = T + burn
    s1 = np.empty(n, dtype=np.int64)
    s1[0] = 0
    for t in range(1, n):
        s1[t] = s1[t - 1] if rng.random() < stay else 1 - s1[t - 1]
    Y = np.zeros((2, n))
    for t in range(p, n):
        z = np.concatenate([Y[0, t - p : t][::-1], Y[1, t - p : t][::-1]])
        for i, reg in enumerate((s1[t], 0)):
            mu, s2 = regimes[reg]
            Y[i, t] = mu + z @ upsilon[i] + np.sqrt(s2) * rng.standard_normal()
    return Y[0, burn:], Y[1, burn:], s1[burn:], upsilon


def fit_var_mixture(Y1, Y2, spec: VarModelSpec, schedule: Schedule, construction=None,
                    tuning=None, freeze_upsilon=False, upsilon=None):
    """Run the slice-Gibbs sampler for the VAR mixture on growth series ``Y1, Y2``.

    Returns ``(archive, model)``; the model holds the final ``Upsilon``.
    """
    model = VarMixtureModel(spec, Y1, Y2, upsilon=upsilon, freeze_upsilon=freeze_upsilon)
    if construction is None:
        construction = StickConstruction("H1", 2, tuple(g.mean for g in spec.alpha_prior))
    sampler = SliceGibbsSampler(construction, model, model.series_data(), tuning or MhTuning())
    archive = sampler.run(schedule, meta={"model": "var", "p": spec.p})
    return archive, model


def sequential_predictive_density(archive, Y1, Y2, p, grid, series, burn_in=True):
    """Density of ``Y_it`` on ``grid`` for each ``t = p+1..T`` given the observed lags.

    Averages over archived sweeps, plugging in each sweep's ``Upsilon`` and its
    occupied components with weights renormalised to one. Every draw uses the
    full-sample posterior, so this is not a filtered predictive.
    """
    grid = np.asarray(grid, dtype=float)
    Z = lag_matrix(Y1, Y2, p)
    recs = archive.after_burn_in() if burn_in else archive.records
    if not recs:
        raise ParameterError("archive has no records to average")
    out = np.zeros((Z.shape[0], grid.size))
    for rec in recs:
        ups = np.asarray(rec["upsilon"])[series - 1]
        w = np.asarray(rec["weights"][series - 1])
        w = w / w.sum()
        mu = np.asarray(rec["atoms"]["mu"])
        s2 = np.asarray(rec["atoms"]["sigma2"])
        loc = (Z @ ups)[:, None] + mu[None, :]  # (T-p, K)
        dens = np.exp(-0.5 * (grid[:, None, None] - loc[None]) ** 2 / s2) / np.sqrt(2 * np.pi * s2)
        out += np.einsum("gtk,k->tg", dens, w)
    return out / len(recs)
