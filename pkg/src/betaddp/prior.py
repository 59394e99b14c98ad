"""Vectors of dependent stick-breaking measures built from products of betas.

Two schemes are provided. Under ``H1`` every series shares a factor ``V0``
and owns a private factor::

    S_ik = V0k * Vik,    V0k ~ Beta(1 - l + a1, a2 + l k),  Vik ~ Beta(1 - l, a1)

so each ``S_ik`` is ``Beta(1 - l, a1 + a2 + l k)``. Under ``H2`` the sticks are
nested partial products::

    S_ik = V0k V1k ... V(r-i)k

with ``V0k ~ Beta(1 - l, a1 + l k)`` and
``Vjk ~ Beta(1 + a1 + ... + aj + l (k - 1), a(j+1))``, giving
``S_ik ~ Beta(1 - l, a1 + ... + a(r-i+1) + l k)`` and ``S_1k <= ... <= S_rk``.
``l = 0`` gives Dirichlet-process marginals, ``l > 0`` Poisson-Dirichlet ones.

Both schemes are encoded by an incidence matrix ``M`` (series x factors) with
``log S = M @ log V``; moments, samplers and the Gibbs sampler all work from it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .distributions import (
    BetaParams,
    ParameterError,
    beta_logpdf,
    beta_moment,
    sample_beta,
)

__all__ = [
    "Scheme",
    "AtomMode",
    "UnsupportedError",
    "StickConstruction",
    "AtomScheme",
    "TruncatedMeasureVector",
    "sample_factors",
    "sample_stick_vector",
    "stick_moments",
    "stick_correlation",
    "measure_correlation",
    "closed_form_stick_correlation",
    "closed_form_measure_correlation",
    "log_weights",
    "sample_truncated_measures",
    "expected_dp_clusters",
]


class UnsupportedError(NotImplementedError):
    """Requested quantity has no implemented closed form for this configuration."""


class Scheme(str, enum.Enum):
    H1 = "H1"
    H2 = "H2"


class AtomMode(str, enum.Enum):
    COMMON = "common"
    PRODUCT = "product"
    ANOVA = "anova"


@dataclass(frozen=True)
class StickConstruction:
    scheme: Scheme
    r: int
    alphas: tuple
    discount: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if int(self.r) != self.r or self.r < 2:
            raise ParameterError(f"r must be an integer >= 2, got {self.r!r}")
        if not 0.0 <= self.discount < 1.0:
            raise ParameterError(f"discount must lie in [0, 1), got {self.discount!r}")
        want = 2 if self.scheme is Scheme.H1 else self.r
        if len(self.alphas) != want:
            raise ParameterError(
                f"{self.scheme.value} with r={self.r} needs {want} alphas, got {len(self.alphas)}"
            )
        if any(not (a > 0 and math.isfinite(a)) for a in self.alphas):
            raise ParameterError(f"alphas must be positive, got {self.alphas!r}")

    @property
    def n_factors(self) -> int:
        return self.r + 1 if self.scheme is Scheme.H1 else self.r

    @property
    def incidence(self) -> np.ndarray:
        """0/1 matrix ``M`` with ``S_i = prod_f V_f ** M[i, f]`` (series i is 0-based)."""
        r = self.r
        m = np.zeros((r, self.n_factors), dtype=np.int64)
        if self.scheme is Scheme.H1:
            m[:, 0] = 1
            m[np.arange(r), np.arange(1, r + 1)] = 1
        else:
            for i in range(r):
                m[i, : r - i] = 1
        return m

    def with_alphas(self, alphas) -> "StickConstruction":
        return StickConstruction(self.scheme, self.r, tuple(alphas), self.discount)

    def factor_params(self, k, alphas=None):
        """Beta shapes ``(a, b)`` of the factors of stick ``k`` (1-based).

        ``k`` may be an array; the result then has shape ``k.shape + (n_factors,)``.
        """
        al = np.asarray(self.alphas if alphas is None else alphas, dtype=float)
        k = np.asarray(k, dtype=float)
        if np.any(k < 1) or np.any(k != np.floor(k)):
            raise ParameterError(f"stick index must be an integer >= 1, got {k!r}")
        l = self.discount
        nf = self.n_factors
        a = np.empty(k.shape + (nf,))
        b = np.empty(k.shape + (nf,))
        if self.scheme is Scheme.H1:
            a[..., 0] = 1.0 - l + al[0]
            b[..., 0] = al[1] + l * k
            a[..., 1:] = 1.0 - l
            b[..., 1:] = al[0]
        else:
            a[..., 0] = 1.0 - l
            b[..., 0] = al[0] + l * k
            csum = np.cumsum(al)
            for j in range(1, nf):
                a[..., j] = 1.0 + csum[j - 1] + l * (k - 1.0)
                b[..., j] = al[j]
        return a, b

    def marginal_params(self, i: int, k: int = 1) -> BetaParams:
        """Marginal law of ``S_ik`` (series ``i`` is 1-based)."""
        if not 1 <= i <= self.r:
            raise ParameterError(f"series index must lie in 1..{self.r}, got {i}")
        l = self.discount
        if self.scheme is Scheme.H1:
            total = self.alphas[0] + self.alphas[1]
        else:
            total = sum(self.alphas[: self.r - i + 1])
        return BetaParams(1.0 - l, total + l * k)

    def sticks(self, factors):
        """Map factor array ``(..., n_factors)`` to stick array ``(..., r)``."""
        with np.errstate(divide="ignore"):
            return np.exp(np.log(factors) @ self.incidence.T.astype(float))

    def factor_logpdf(self, factors, k, alphas=None):
        """Prior log-density of factor vectors, summed over factors."""
        a, b = self.factor_params(k, alphas)
        return np.sum(beta_logpdf(factors, a, b), axis=-1)


@dataclass
class AtomScheme:
    """How atoms are drawn for each stick index.

    ``base`` is a callable ``base(rng, size) -> ndarray``. ``COMMON`` uses one
    draw per row for all series. ``PRODUCT`` takes ``per_series``, one base
    callable per series. ``ANOVA`` adds an ``offset(rng, size)`` draw per series
    to a shared ``base`` draw.
    """

    mode: AtomMode
    base: Optional[Callable] = None
    per_series: Sequence[Callable] = field(default_factory=tuple)
    offset: Optional[Callable] = None

    def __post_init__(self):
        self.mode = AtomMode(self.mode)
        if self.mode in (AtomMode.COMMON, AtomMode.ANOVA) and self.base is None:
            raise ParameterError(f"{self.mode.value} atoms need a base sampler")
        if self.mode is AtomMode.ANOVA and self.offset is None:
            raise ParameterError("anova atoms need an offset sampler")
        if self.mode is AtomMode.PRODUCT and not self.per_series:
            raise ParameterError("product atoms need one base sampler per series")

    def draw(self, K: int, r: int, rng):
        if self.mode is AtomMode.COMMON:
            return np.asarray(self.base(rng, K))
        if self.mode is AtomMode.PRODUCT:
            if len(self.per_series) != r:
                raise ParameterError(f"need {r} per-series samplers, got {len(self.per_series)}")
            return np.stack([np.asarray(f(rng, K)) for f in self.per_series], axis=1)
        shared = np.asarray(self.base(rng, K))
        offsets = np.stack([np.asarray(self.offset(rng, K)) for _ in range(r)], axis=1)
        return shared[:, None, ...] + offsets


@dataclass
class TruncatedMeasureVector:
    """First ``K`` sticks of ``r`` dependent measures plus the leftover mass."""

    sticks: np.ndarray  # (K, r)
    weights: np.ndarray  # (K, r)
    atoms: np.ndarray  # (K, ...) under common atoms, else (K, r, ...)
    remainder: np.ndarray  # (r,)
    factors: np.ndarray  # (K, n_factors)
    factor_a: np.ndarray  # per-k beta shapes; rows differ when l > 0
    factor_b: np.ndarray
    atom_mode: AtomMode = AtomMode.COMMON

    @property
    def K(self) -> int:
        return self.sticks.shape[0]

    def atoms_for_series(self, i: int):
        """Atoms seen by series ``i`` (1-based)."""
        if not 1 <= i <= self.weights.shape[1]:
            raise ParameterError(f"series index must lie in 1..{self.weights.shape[1]}, got {i}")
        if self.atom_mode is AtomMode.COMMON:
            return self.atoms
        return self.atoms[:, i - 1]

    def measure_of(self, indicator) -> np.ndarray:
        """``G_i(A)`` for each series, with ``indicator(atoms) -> bool array``."""
        if self.atom_mode is AtomMode.COMMON:
            hit = np.asarray(indicator(self.atoms), dtype=float)
            return hit @ self.weights
        return np.array(
            [np.asarray(indicator(self.atoms[:, i]), float) @ self.weights[:, i] for i in range(self.weights.shape[1])]
        )


def sample_factors(c: StickConstruction, k, rng, alphas=None):
    """Draw factor vectors for stick indices ``k``; returns ``k.shape + (n_factors,)``."""
    a, b = c.factor_params(k, alphas)
    return sample_beta(a, b, rng)


def sample_stick_vector(c: StickConstruction, k: int, rng) -> np.ndarray:
    """One stick vector ``(S_1k, ..., S_rk)``."""
    if int(k) != k or k < 1:
        raise ParameterError(f"stick index must be an integer >= 1, got {k!r}")
    return c.sticks(sample_factors(c, int(k), rng))


def _require_dp(c: StickConstruction):
    if c.discount != 0.0:
        raise UnsupportedError(
            "exact correlations are implemented for l = 0 only; use Monte Carlo for l > 0"
        )


def stick_moments(c: StickConstruction, i: int, j: int):
    """Exact ``(E S_i, E S_i^2, E S_j, E S_j^2, E S_i S_j)`` for stick ``k = 1``.

    Series indices are 1-based. Each moment is a product of independent beta
    factor moments, with powers read from the incidence matrix.
    """
    _require_dp(c)
    a, b = c.factor_params(1)
    m = c.incidence

    def moment(powers):
        out = 1.0
        for f, p in enumerate(powers):
            if p:
                out *= beta_moment(BetaParams(a[f], b[f]), int(p))
        return out

    mi, mj = m[i - 1], m[j - 1]
    return (
        moment(mi),
        moment(2 * mi),
        moment(mj),
        moment(2 * mj),
        moment(mi + mj),
    )


def _check_pair(c, i, j):
    for s in (i, j):
        if not 1 <= s <= c.r:
            raise ParameterError(f"series index must lie in 1..{c.r}, got {s}")
    if i == j:
        raise ParameterError("correlation needs two distinct series")


def stick_correlation(c: StickConstruction, i: int = 1, j: int = 2) -> float:
    """Pearson correlation of ``(S_i1, S_j1)`` from exact moments (``l = 0``)."""
    _check_pair(c, i, j)
    e_i, e_ii, e_j, e_jj, e_ij = stick_moments(c, i, j)
    return (e_ij - e_i * e_j) / math.sqrt((e_ii - e_i**2) * (e_jj - e_j**2))


def measure_correlation(c: StickConstruction, i: int = 1, j: int = 2, atoms=AtomMode.COMMON) -> float:
    """Correlation ``C_ij`` of ``G_i(A)`` and ``G_j(A)`` under common atoms.

    With i.i.d. stick vectors::

        C_ij = E[S_i S_j] / (E S_i + E S_j - E[S_i S_j])
               * sqrt((2 E S_i - E S_i^2)(2 E S_j - E S_j^2) / (E S_i^2 E S_j^2))

    which does not depend on ``A``.
    """
    if AtomMode(atoms) is not AtomMode.COMMON:
        raise UnsupportedError("C_ij equals the measure correlation only under common atoms")
    _check_pair(c, i, j)
    e_i, e_ii, e_j, e_jj, e_ij = stick_moments(c, i, j)
    ratio = e_ij / (e_i + e_j - e_ij)
    return ratio * math.sqrt((2 * e_i - e_ii) * (2 * e_j - e_jj) / (e_ii * e_jj))


def closed_form_stick_correlation(c: StickConstruction) -> float:
    """Published two-series stick correlations, kept as a cross-check."""
    if c.r != 2:
        raise UnsupportedError("closed form stick correlations are given for r = 2 only")
    _require_dp(c)
    a1, a2 = c.alphas
    if c.scheme is Scheme.H1:
        return a2 / ((a1 + 1.0) * (a1 + a2))
    return math.sqrt(a1 * (2.0 + a1 + a2) / ((a1 + a2) * (2.0 + a1)))


def closed_form_measure_correlation(c: StickConstruction, i: int = 1, j: int = 2) -> float:
    """Published closed forms for ``C_ij``.

    For H2 this is the nested-sum formula valid for any ``r``. For H1 it is the
    printed expression, which does not agree with the moment definition (it
    gives 1 at ``alphas = (1, 1)``); :func:`measure_correlation` is authoritative.
    """
    _require_dp(c)
    _check_pair(c, i, j)
    if c.scheme is Scheme.H1:
        a1, a2 = c.alphas
        return (a1 + a2 + 1.0) * (a1 + 2.0) / (2.0 * (a1 + 1.0) * (a1 + a2 + 1.0) - (a1 + 2.0))
    i, j = min(i, j), max(i, j)
    al = c.alphas
    ci = 1.0 + sum(al[: c.r - i + 1])
    cj = 1.0 + sum(al[: c.r - j + 1])
    gap = sum(al[c.r - j + 1 : c.r - i + 1])
    return 2.0 * math.sqrt(ci) * cj**1.5 / (2.0 * cj**2 + (1.0 + cj) * gap)


def log_weights(sticks):
    """Stick-breaking log-weights along axis 0, plus log remainder mass.

    ``log W_k = log S_k + sum_{j<k} log(1 - S_j)``. Works on ``(K,)`` or
    ``(K, r)`` arrays; the remainder has the trailing shape.
    """
    sticks = np.asarray(sticks, dtype=float)
    with np.errstate(divide="ignore"):
        log_rest = np.cumsum(np.log1p(-sticks), axis=0)
        prefix = np.concatenate([np.zeros((1,) + sticks.shape[1:]), log_rest[:-1]], axis=0)
        return np.log(sticks) + prefix, log_rest[-1]


def sample_truncated_measures(c: StickConstruction, atoms: AtomScheme, K: int, rng) -> TruncatedMeasureVector:
    """Draw the first ``K`` sticks, weights and atoms of ``(G_1, ..., G_r)``."""
    if int(K) != K or K < 1:
        raise ParameterError(f"truncation K must be a positive integer, got {K!r}")
    ks = np.arange(1, K + 1)
    a, b = c.factor_params(ks)
    factors = sample_beta(a, b, rng)
    sticks = c.sticks(factors)
    logw, logrem = log_weights(sticks)
    return TruncatedMeasureVector(
        sticks=sticks,
        weights=np.exp(logw),
        atoms=atoms.draw(K, c.r, rng),
        remainder=np.exp(logrem),
        factors=factors,
        factor_a=a,
        factor_b=b,
        atom_mode=atoms.mode,
    )


def expected_dp_clusters(theta: float, n: int) -> float:
    """Expected number of distinct values among ``n`` draws from a DP(theta)."""
    i = np.arange(1, n + 1)
    return float(np.sum(theta / (theta + i - 1.0)))
