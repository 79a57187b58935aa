# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled log-domain Sinkhorn sweeps.

Built with ``-ffast-math`` so the exp loops vectorise; all sentinels are
finite because that flag assumes no infinities.
"""

import numpy as np
from libc.math cimport exp, log, fabs
from libc.float cimport DBL_MAX


cdef void _row_lse(const double* logk, const double* g, Py_ssize_t n, Py_ssize_t m,
                   double* out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef const double* row
    cdef double mx, s, z
    for i in range(n):
        row = logk + i * m
        mx = -DBL_MAX
        for j in range(m):
            z = row[j] + g[j]
            mx = z if z > mx else mx
        s = 0.0
        for j in range(m):
            s += exp(row[j] + g[j] - mx)
        out[i] = mx + log(s)


cdef void _col_lse(const double* logk, const double* f, Py_ssize_t n, Py_ssize_t m,
                   double* mx, double* acc, double* out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef const double* row
    cdef double z, fi
    for j in range(m):
        mx[j] = -DBL_MAX
        acc[j] = 0.0
    for i in range(n):
        row = logk + i * m
        fi = f[i]
        for j in range(m):
            z = row[j] + fi
            mx[j] = z if z > mx[j] else mx[j]
    for i in range(n):
        row = logk + i * m
        fi = f[i]
        for j in range(m):
            acc[j] += exp(row[j] + fi - mx[j])
    for j in range(m):
        out[j] = mx[j] + log(acc[j])


def sinkhorn_log(const double[:, ::1] logk, const double[::1] log_r,
                 const double[::1] log_c, double tol, long max_iter,
                 const double[::1] g0):
    """Log-domain Sinkhorn; same contract as the fallback."""
    cdef Py_ssize_t n = logk.shape[0], m = logk.shape[1], i, j
    cdef double[::1] f = np.zeros(n)
    cdef double[::1] g = np.array(g0, dtype=np.float64)
    cdef double[::1] lse_r = np.empty(n)
    cdef double[::1] lse_c = np.empty(m)
    cdef double[::1] mx = np.empty(m)
    cdef double[::1] acc = np.empty(m)
    cdef double viol = DBL_MAX, d
    cdef long it = 0
    if n == 0 or m == 0:
        return np.asarray(f), np.asarray(g), 0, 0.0

    with nogil:
        _row_lse(&logk[0, 0], &g[0], n, m, &lse_r[0])
        while it < max_iter:
            for i in range(n):
                f[i] = log_r[i] - lse_r[i]
            _col_lse(&logk[0, 0], &f[0], n, m, &mx[0], &acc[0], &lse_c[0])
            for j in range(m):
                g[j] = log_c[j] - lse_c[j]
            it += 1
            _row_lse(&logk[0, 0], &g[0], n, m, &lse_r[0])
            viol = 0.0
            for i in range(n):
                d = fabs(exp(f[i] + lse_r[i]) - exp(log_r[i]))
                viol = d if d > viol else viol
            if viol <= tol:
                break
    return np.asarray(f), np.asarray(g), int(it), float(viol)
