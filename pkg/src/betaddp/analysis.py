"""Posterior summaries computed from chain archives.

Series numbers are 1-based, matching the rest of the public API.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import gaussian_kde

from .distributions import ParameterError
from .prior import sample_factors

__all__ = [
    "PairwiseMatrix",
    "DensityGrid",
    "LSClustering",
    "ContractError",
    "predictive_weights",
    "predictive_sample",
    "cluster_count_trace",
    "cluster_count_posterior",
    "pairwise_matrix",
    "least_squares_clustering",
    "ergodic_average",
    "density_grid",
    "local_maxima",
    "predictive_draws",
    "acceptance_summary",
]


class ContractError(ValueError):
    """A summary was requested that the archive's model cannot support."""


@dataclass
class PairwiseMatrix:
    P: np.ndarray
    M: int
    pair: tuple


@dataclass
class DensityGrid:
    grid: np.ndarray
    values: np.ndarray  # (r, len(grid))

    def integral(self):
        return np.trapezoid(self.values, self.grid, axis=-1)


@dataclass
class LSClustering:
    sweep: int
    position: int
    allocation: np.ndarray
    loss: float
    atoms: dict


def predictive_weights(state, sampler, rng, tol=1e-10):
    """Weights ``(r, K)`` and atoms after padding with prior sticks until every
    series' leftover mass is below ``tol``. Does not modify ``state``."""
    V = state.V
    atoms = state.atoms[: V.shape[0] + (1 if sampler.truncation else 0)]
    w, logrem = sampler.weights(V)
    log_tol = np.log(tol)
    while sampler.truncation is None and np.any(logrem >= log_tol):
        K = V.shape[0]
        extra = max(8, K)
        new = sample_factors(sampler.construction, np.arange(K + 1, K + extra + 1), rng, state.alpha)
        V = np.vstack([V, np.atleast_2d(new)])
        w, logrem = sampler.weights(V)
    if atoms.shape[0] < w.shape[1]:
        atoms = np.vstack([atoms, sampler.model.sample_prior_atoms(rng, w.shape[1] - atoms.shape[0])])
    return w, atoms


def predictive_sample(state, sampler, rng, tol=1e-10):
    """One draw ``(Y_1,new, ..., Y_r,new)`` from the posterior predictive given ``state``."""
    w, atoms = predictive_weights(state, sampler, rng, tol)
    out = np.empty(w.shape[0])
    for i in range(w.shape[0]):
        cum = np.cumsum(w[i])
        d = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), cum.size - 1)
        out[i] = sampler.model.sample_kernel(atoms[d], rng)
    return out


def _records(archive, burn_in):
    return archive.after_burn_in() if burn_in else list(archive.records)


def cluster_count_trace(archive, burn_in=False):
    """Occupied-component count per recorded sweep, shape ``(M, r)``."""
    recs = _records(archive, burn_in)
    return np.array([rec["n_clusters"] for rec in recs], dtype=np.int64).reshape(len(recs), -1)


def cluster_count_posterior(archive, series: int):
    """Post-burn-in frequencies of the cluster count of one series, and its mode."""
    counts = cluster_count_trace(archive, burn_in=True)[:, series - 1]
    values, freq = np.unique(counts, return_counts=True)
    probs = dict(zip(values.tolist(), (freq / freq.sum()).tolist()))
    return probs, int(values[np.argmax(freq)])


def _allocations(archive, series, burn_in, thin):
    recs = _records(archive, burn_in)[::thin]
    if not recs:
        raise ParameterError("archive has no records to summarise")
    return recs, np.array([rec["D"][series - 1] for rec in recs], dtype=np.int64)


def pairwise_matrix(archive, i: int, j: int, burn_in=True, thin=1) -> PairwiseMatrix:
    """Co-allocation frequencies ``P[s, t] = mean_l 1{D_is^l == D_jt^l}``.

    Cross-series entries (``i != j``) are meaningful only when atoms are
    shared across series.
    """
    if i != j and archive.meta.get("atom_mode", "common") != "common":
        raise ContractError("cross-series co-clustering needs common atoms")
    _, di = _allocations(archive, i, burn_in, thin)
    _, dj = _allocations(archive, j, burn_in, thin)
    P = np.zeros((di.shape[1], dj.shape[1]))
    for a, b in zip(di, dj):
        P += a[:, None] == b[None, :]
    return PairwiseMatrix(P / di.shape[0], di.shape[0], (i, j))


def least_squares_clustering(archive, series: int, pairwise=None, burn_in=True, thin=1) -> LSClustering:
    """Recorded allocation closest in squared error to the pairwise matrix.

    Ties go to the earliest sweep.
    """
    recs, d = _allocations(archive, series, burn_in, thin)
    if pairwise is None:
        pairwise = pairwise_matrix(archive, series, series, burn_in, thin)
    P = pairwise.P
    losses = np.array([np.sum(((a[:, None] == a[None, :]) - P) ** 2) for a in d])
    best = int(np.argmin(losses))
    rec = recs[best]
    alloc = d[best]
    occ = np.asarray(rec["occupied"])
    pos = np.searchsorted(occ, alloc)
    atoms = {name: np.asarray(vals)[pos] for name, vals in rec["atoms"].items()}
    return LSClustering(rec["sweep"], best, alloc, float(losses[best]), atoms)


def ergodic_average(trace):
    trace = np.asarray(trace, dtype=float)
    if trace.size == 0:
        raise ParameterError("ergodic average of an empty trace")
    return np.cumsum(trace, axis=0) / np.arange(1, trace.shape[0] + 1).reshape((-1,) + (1,) * (trace.ndim - 1))


def density_grid(samples, grid=None, n_grid=512, pad=0.15):
    """Gaussian-kernel density estimate (Silverman bandwidth) for each series.

    ``samples`` is ``(M, r)``, e.g. the archived predictive draws.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if grid is None:
        lo, hi = samples.min(), samples.max()
        span = hi - lo
        grid = np.linspace(lo - pad * span, hi + pad * span, n_grid)
    grid = np.asarray(grid, dtype=float)
    values = np.vstack([gaussian_kde(samples[:, i], bw_method="silverman")(grid) for i in range(samples.shape[1])])
    return DensityGrid(grid, values)


def local_maxima(grid, values, min_height=0.0):
    """Grid locations of strict interior local maxima above ``min_height``."""
    v = np.asarray(values)
    inner = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]) & (v[1:-1] > min_height)
    return np.asarray(grid)[1:-1][inner]


def predictive_draws(archive):
    """Archived predictive draws after burn-in, shape ``(M, r)``."""
    rows = [rec["y_pred"] for rec in archive.after_burn_in() if "y_pred" in rec]
    return np.array(rows, dtype=float)


def acceptance_summary(archive):
    return dict(archive.meta.get("acceptance", {}))

