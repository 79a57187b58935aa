# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled linear-assignment kernel."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def lap_min(const double[:, ::1] cost):
    """Shortest-augmenting-path assignment; same contract as the fallback."""
    cdef Py_ssize_t n = cost.shape[0]
    cdef double[::1] u = np.zeros(n)
    cdef double[::1] v = np.zeros(n + 1)
    cdef cnp.int64_t[::1] p = np.full(n + 1, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] way = np.zeros(n + 1, dtype=np.int64)
    cdef double[::1] minv = np.empty(n)
    cdef unsigned char[::1] used = np.zeros(n + 1, dtype=np.uint8)
    cdef cnp.int64_t[::1] image = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur, ui0

    with nogil:
        for i in range(n):
            p[n] = i
            j0 = n
            for j in range(n):
                minv[j] = INFINITY
            for j in range(n + 1):
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                ui0 = u[i0]
                delta = INFINITY
                j1 = -1
                for j in range(n):
                    if not used[j]:
                        cur = cost[i0, j] - ui0 - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if j1 == -1 or minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    elif j < n:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == -1:
                    break
            while j0 != n:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
        for j in range(n):
            image[p[j]] = j
    return np.asarray(image)
