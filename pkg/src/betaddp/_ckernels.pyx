# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops of the slice-Gibbs sweep."""
from libc.math cimport exp, INFINITY


def allocate_gaussian(const double[::1] y, const long[::1] series,
                      const double[::1] u, const double[:, ::1] w,
                      const double[:, ::1] cumw, const double[::1] mu,
                      const double[::1] lognorm, const double[::1] prec,
                      const double[::1] draws, long[::1] d_out,
                      long[::1] nstar_out, double[::1] work):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t K = mu.shape[0]
    cdef Py_ssize_t j, d, last
    cdef long i
    cdef double top, total, target, acc, diff, uj, ll, thresh
    for j in range(n):
        i = series[j]
        uj = u[j]
        thresh = 1.0 - uj
        nstar_out[j] = -1
        for d in range(K):
            if cumw[i, d] > thresh:
                nstar_out[j] = d + 1
                break
        top = -INFINITY
        last = -1
        for d in range(K):
            if w[i, d] > uj:
                diff = y[j] - mu[d]
                ll = lognorm[d] - 0.5 * diff * diff * prec[d]
                work[d] = ll
                if ll > top:
                    top = ll
                last = d
            else:
                work[d] = -INFINITY
        if last < 0 or top == -INFINITY:
            return j
        total = 0.0
        for d in range(last + 1):
            if work[d] != -INFINITY:
                work[d] = exp(work[d] - top)
                total += work[d]
            else:
                work[d] = 0.0
        target = draws[j] * total
        acc = 0.0
        d_out[j] = last + 1
        for d in range(last + 1):
            acc += work[d]
            if work[d] > 0.0 and acc >= target:
                d_out[j] = d + 1
                break
    return -1


def occupancy(const long[::1] d, const long[::1] series,
              long[:, ::1] a_out, long[:, ::1] b_out):
    cdef Py_ssize_t j, k, i
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t r = a_out.shape[0]
    cdef Py_ssize_t K = a_out.shape[1]
    cdef long run
    a_out[:, :] = 0
    for j in range(n):
        a_out[series[j], d[j] - 1] += 1
    for i in range(r):
        run = 0
        for k in range(K - 1, -1, -1):
            b_out[i, k] = run
            run += a_out[i, k]
