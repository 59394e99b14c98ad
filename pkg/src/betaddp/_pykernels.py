"""Numpy implementations of the sweep kernels; same contract as ``_ckernels``."""
import numpy as np


def allocate_gaussian(y, series, u, w, cumw, mu, lognorm, prec, draws, d_out, nstar_out, work=None):
    """Sample allocations for every observation; returns -1 or the first failing index.

    Candidates for observation ``j`` in series ``i`` are the components with
    ``w[i, d] > u[j]``; among them ``d`` is chosen with probability proportional
    to the Gaussian kernel, by inverting the cumulative sum at ``draws[j] * total``.
    ``nstar_out[j]`` receives the smallest ``N`` with ``cumw[i, N-1] > 1 - u[j]``
    (or -1 if the instantiated components do not reach it).
    """
    wj = w[series]
    cand = wj > u[:, None]
    reach = cumw[series] > (1.0 - u)[:, None]
    nstar_out[:] = np.where(reach.any(axis=1), reach.argmax(axis=1) + 1, -1)
    ll = lognorm[None, :] - 0.5 * (y[:, None] - mu[None, :]) ** 2 * prec[None, :]
    ll = np.where(cand, ll, -np.inf)
    top = ll.max(axis=1)
    bad = ~np.isfinite(top)
    if bad.any():
        return int(np.argmax(bad))
    with np.errstate(under="ignore"):
        p = np.where(cand, np.exp(ll - top[:, None]), 0.0)
    cum = np.cumsum(p, axis=1)
    target = draws * cum[:, -1]
    hit = (cum >= target[:, None]) & (p > 0.0)
    last = cand.shape[1] - 1 - np.argmax(cand[:, ::-1], axis=1)
    d_out[:] = np.where(hit.any(axis=1), hit.argmax(axis=1), last) + 1
    return -1


def occupancy(d, series, a_out, b_out):
    """Counts ``A[i, k] = #{j: D_ij = k+1}`` and ``B[i, k] = #{j: D_ij > k+1}``."""
    a_out[:] = 0
    np.add.at(a_out, (series, d - 1), 1)
    tail = np.cumsum(a_out[:, ::-1], axis=1)[:, ::-1]
    b_out[:, :-1] = tail[:, 1:]
    b_out[:, -1] = 0
