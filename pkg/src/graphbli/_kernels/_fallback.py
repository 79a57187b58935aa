"""Pure numpy implementations of the hot kernels.

These mirror the Cython kernels operation for operation so that both
backends return the same assignment (and the same Sinkhorn potentials up
to libm rounding in ``exp``/``log``).
"""

import numpy as np


def lap_min(cost):
    """Shortest-augmenting-path linear assignment (minimisation).

    Parameters
    ----------
    cost : ndarray, shape (n, n), float64, C-contiguous

    Returns
    -------
    image : ndarray of int64, shape (n,)
        ``image[i]`` is the column assigned to row ``i``.

    Notes
    -----
    Rows are inserted one at a time; each insertion runs a Dijkstra search
    over reduced costs ``cost[i, j] - u[i] - v[j]``. Among columns with equal
    tentative distance the lowest index is settled first, which makes the
    result a deterministic function of the matrix values.
    """
    n = cost.shape[0]
    u = np.zeros(n)
    v = np.zeros(n + 1)
    # p[j] = row matched to column j; slot n is the virtual start column
    p = np.full(n + 1, -1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    minv = np.empty(n)
    used = np.zeros(n + 1, dtype=bool)

    for i in range(n):
        p[n] = i
        j0 = n
        minv.fill(np.inf)
        used.fill(False)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[:n]
            cur = cost[i0] - u[i0] - v[:n]
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[:n][better] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            settled = np.flatnonzero(used)
            u[p[settled]] += delta
            v[settled] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == -1:
                break
        while j0 != n:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    image = np.empty(n, dtype=np.int64)
    image[p[:n]] = np.arange(n)
    return image


def _row_lse(logk, g):
    z = logk + g[None, :]
    m = z.max(axis=1)
    return m + np.log(np.exp(z - m[:, None]).sum(axis=1))


def _col_lse(logk, f):
    z = logk + f[:, None]
    m = z.max(axis=0)
    return m + np.log(np.exp(z - m[None, :]).sum(axis=0))


def sinkhorn_log(logk, log_r, log_c, tol, max_iter, g0):
    """Log-domain Sinkhorn balancing of the kernel ``exp(logk)``.

    Returns ``(f, g, iterations, row_violation)`` where the balanced plan is
    ``exp(logk + f[:, None] + g[None, :])``. Column marginals are exact after
    every sweep; the loop stops once the L-inf row violation is within
    ``tol`` or after ``max_iter`` sweeps. ``g0`` warm-starts the column
    potentials.
    """
    n, m = logk.shape
    r = np.exp(log_r)
    f = np.zeros(n)
    g = np.array(g0, dtype=np.float64)
    lse_r = _row_lse(logk, g)
    viol = np.inf
    it = 0
    while it < max_iter:
        f = log_r - lse_r
        g = log_c - _col_lse(logk, f)
        it += 1
        lse_r = _row_lse(logk, g)
        viol = float(np.max(np.abs(np.exp(f + lse_r) - r)))
        if viol <= tol:
            break
    return f, g, it, viol
