"""Gaussian-kernel mixture with a normal / inverse-gamma base measure.

Atoms are ``(mu, sigma2)`` pairs stored as rows of a ``(K, 2)`` array. The base
measure is ``N(0, 1/s2) x IG(lam, lam)``; concentration parameters carry
independent gamma hyperpriors ``Gamma(zeta_1j, zeta_2j)`` (shape, rate).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    GammaParams,
    ParameterError,
    normal_logpdf,
    sample_inverse_gamma,
)

__all__ = [
    "GaussianModelSpec",
    "GaussianModel",
    "kernel_logdensity",
    "update_atom_conjugate",
    "MIX_MODELS",
    "generate_mix_data",
    "wi_si_presets",
]

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class GaussianModelSpec:
    s2: float = 0.1
    lam: float = 0.5
    zeta: tuple = (0.01, 0.01, 0.01, 0.01)  # (zeta11, zeta21, zeta12, zeta22)

    def __post_init__(self):
        object.__setattr__(self, "zeta", tuple(float(z) for z in self.zeta))
        if self.s2 <= 0 or self.lam <= 0:
            raise ParameterError("s2 and lam must be positive")
        if len(self.zeta) % 2 or any(z <= 0 for z in self.zeta):
            raise ParameterError(f"zeta must hold positive (shape, rate) pairs, got {self.zeta!r}")

    @property
    def alpha_prior(self):
        """Gamma hyperprior of each concentration parameter, in order."""
        z = self.zeta
        return [GammaParams(z[2 * j], z[2 * j + 1]) for j in range(len(z) // 2)]


def kernel_logdensity(y, atom):
    """Log of the normal kernel ``N(y; mu, sigma2)`` for ``atom = (mu, sigma2)``."""
    mu, sigma2 = atom
    if sigma2 <= 0:
        raise ParameterError("sigma2 must be positive")
    return normal_logpdf(y, mu, sigma2)


def update_atom_conjugate(values, atom, spec: GaussianModelSpec, rng):
    """One Gibbs pass over a single atom: ``mu | sigma2`` then ``sigma2 | mu``.

    ``values`` pools every observation allocated to the atom, whichever series
    it came from. With no data both draws come from the base measure.
    """
    values = np.asarray(values, dtype=float)
    _, sigma2 = atom
    n = values.size
    prec = spec.s2 + n / sigma2
    mean = values.sum() / sigma2 / prec
    mu = mean + rng.standard_normal() / np.sqrt(prec)
    ss = np.sum((values - mu) ** 2)
    sigma2 = float(sample_inverse_gamma(spec.lam + 0.5 * n, spec.lam + 0.5 * ss, rng))
    return float(mu), sigma2


@dataclass
class GaussianModel:
    """Common-atom Gaussian mixture kernel used by the slice-Gibbs engine."""

    spec: GaussianModelSpec = field(default_factory=GaussianModelSpec)
    atom_names = ("mu", "sigma2")

    @property
    def alpha_prior(self):
        return self.spec.alpha_prior

    def sample_prior_atoms(self, rng, K):
        mu = rng.standard_normal(K) / np.sqrt(self.spec.s2)
        sigma2 = sample_inverse_gamma(self.spec.lam, self.spec.lam, rng, size=K)
        return np.column_stack([mu, np.atleast_1d(sigma2)])

    def observations(self, data):
        return data.y

    def update_atoms(self, y, d, atoms, rng):
        """Vectorised conjugate update of every row of ``atoms``.

        Rows with no allocated observation reduce to base-measure draws.
        """
        K = atoms.shape[0]
        idx = d - 1
        count = np.bincount(idx, minlength=K).astype(float)[:K]
        total = np.bincount(idx, weights=y, minlength=K)[:K]
        sigma2 = atoms[:, 1]
        prec = self.spec.s2 + count / sigma2
        mu = total / sigma2 / prec + rng.standard_normal(K) / np.sqrt(prec)
        ss = np.bincount(idx, weights=(y - mu[idx]) ** 2, minlength=K)[:K]
        sigma2 = sample_inverse_gamma(self.spec.lam + 0.5 * count, self.spec.lam + 0.5 * ss, rng)
        return np.column_stack([mu, sigma2])

    def kernel_params(self, atoms):
        """``(mu, log normaliser, precision)`` arrays for the allocation kernel."""
        sigma2 = atoms[:, 1]
        return (
            np.ascontiguousarray(atoms[:, 0]),
            -0.5 * (LOG_2PI + np.log(sigma2)),
            1.0 / sigma2,
        )

    def log_kernel(self, y, atoms):
        """``(len(y), K)`` matrix of kernel log-densities."""
        mu, lognorm, prec = self.kernel_params(atoms)
        y = np.asarray(y, dtype=float)
        return lognorm[None, :] - 0.5 * (y[:, None] - mu[None, :]) ** 2 * prec[None, :]

    def sample_kernel(self, atom, rng):
        return float(atom[0] + np.sqrt(atom[1]) * rng.standard_normal())

    def after_sweep(self, state, data, rng):
        return None


# (weight, mean, variance) per component, one list per series.
MIX_MODELS = {
    "Mix1": (
        [(1 / 3, -10.0, 1.0), (1 / 3, 0.0, 1.0), (1 / 3, 10.0, 1.0)],
        [(1 / 3, -10.0, 1.0), (1 / 3, 0.0, 1.0), (1 / 3, 10.0, 1.0)],
    ),
    "Mix2": (
        [(0.25, 0.0, 0.5), (0.25, 3.0, 0.25), (0.25, 2.0, 0.25), (0.25, 5.0, 0.5)],
        [(0.25, 0.0, 0.5), (0.25, 3.0, 0.25), (0.25, -3.0, 0.25), (0.25, 7.0, 0.5)],
    ),
    "Mix3": (
        [(1 / 3, -10.0, 1.0), (1 / 3, 0.0, 1.0), (1 / 3, 10.0, 1.0)],
        [(1 / 6, -10.0, 1.0), (4 / 6, 0.0, 1.0), (1 / 6, 10.0, 1.0)],
    ),
}


def generate_mix_data(model_id: str, n: int, rng, return_labels=False):
    """Simulate ``n`` independent draws per series from one of the Mix designs."""
    if model_id not in MIX_MODELS:
        raise ParameterError(f"unknown mixture model {model_id!r}; choose from {sorted(MIX_MODELS)}")
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    series, labels = [], []
    for comps in MIX_MODELS[model_id]:
        w = np.array([c[0] for c in comps])
        means = np.array([c[1] for c in comps])
        sds = np.sqrt([c[2] for c in comps])
        z = rng.choice(len(comps), size=int(n), p=w / w.sum())
        series.append(means[z] + sds[z] * rng.standard_normal(int(n)))
        labels.append(z)
    if return_labels:
        return series[0], series[1], labels
    return series[0], series[1]


def wi_si_presets():
    """Named hyperparameter bundles: weakly (WI) and strongly (SI) informative."""
    wi = GaussianModelSpec(0.1, 0.5, (0.01, 0.01, 0.01, 0.01))
    si_13 = GaussianModelSpec(0.1, 0.5, (100.0, 400.0, 100.0, 200.0))
    si_2 = GaussianModelSpec(0.1, 0.5, (10.0, 100.0, 200.0, 100.0))
    return {
        "WI": wi,
        "SI-Mix1": si_13,
        "SI-Mix3": si_13,
        "SI-Mix2": si_2,
    }
