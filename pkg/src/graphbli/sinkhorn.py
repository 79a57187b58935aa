"""Entropic optimal transport.

``sinkhorn_plan`` solves ``min <P, C> - (1/reg) h(P)`` over the transport
polytope U(r, c); ``lot`` is the doubly stochastic special case used as the
GOAT step direction, maximising ``<Q, profit> + (1/reg) h(Q)``.

The solver works on dual potentials in the log domain. Plain Sinkhorn
sweeps converge very slowly at ``reg = 500`` when two assignments are
nearly tied, so the regularisation is annealed (doubling ``reg`` from 1 with
warm-started potentials) and, once the sweeps stall, the row potentials are
polished with Newton steps on the column-exact dual.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import DomainError, ShapeError
from .numeric import as_matrix, as_square

log = logging.getLogger(__name__)

# anneal stages stop at this violation; the last stage hands over to Newton below it
_STAGE_TOL = 1e-3
_STAGE_SWEEPS = 50
_NEWTON_SWITCH = 1e-2


@dataclass(frozen=True)
class LotParams:
    """Entropic OT settings.

    ``reg`` is the inverse temperature applied to the (optionally max-abs
    scaled) score matrix; ``tol`` bounds the L-inf marginal violation.
    """

    reg: float = 500.0
    tol: float = 1e-6
    max_iter: int = 1000
    scale: bool = True

    def __post_init__(self):
        if not self.reg > 0:
            raise DomainError("reg must be positive")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


@dataclass
class TransportPlan:
    plan: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray
    converged: bool
    iterations: int
    violation: float
    scale: float


def entropy(p):
    """``-sum p log p`` with ``0 log 0 = 0``."""
    p = as_matrix(p, "p")
    if p.size and p.min() < 0:
        raise DomainError("entropy is undefined for negative entries")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def _col_lse(z):
    m = z.max(axis=0)
    return m + np.log(np.exp(z - m).sum(axis=0))


def _dual(logk, f, r, log_c, c):
    g = log_c - _col_lse(logk + f[:, None])
    return float(r @ f + c @ g), g


def _newton(logk, log_r, log_c, f, tol, max_steps):
    """Newton ascent on the dual in the row potentials, columns kept exact.

    Returns ``(f, g, steps, violation, ok)``; ``ok`` is False when a step
    could not improve the dual, in which case the caller resumes sweeps.
    """
    n = logk.shape[0]
    r, c = np.exp(log_r), np.exp(log_c)
    val, g = _dual(logk, f, r, log_c, c)
    steps = 0
    viol = np.inf
    while True:
        plan = np.exp(logk + f[:, None] + g[None, :])
        res = r - plan.sum(axis=1)
        viol = float(np.abs(res).max())
        if viol <= tol or steps >= max_steps:
            return f, g, steps, viol, True
        # Laplacian form of the reduced Hessian; no cancellation on the diagonal
        w = (plan / c) @ plan.T
        np.fill_diagonal(w, 0.0)
        h = -w
        h[np.diag_indices(n)] = w.sum(axis=1)
        h += 1.0 / n
        # weakly coupled blocks make h near-singular; the line search copes
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            try:
                step = scipy.linalg.solve(h, res, assume_a="pos", check_finite=False)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(h, res, rcond=None)[0]
        steps += 1
        t = 1.0
        while t > 1e-8:
            new_val, new_g = _dual(logk, f + t * step, r, log_c, c)
            if new_val >= val - 1e-13 * (1.0 + abs(val)):
                break
            t *= 0.5
        else:
            return f, g, steps, viol, False
        f = f + t * step
        val, g = new_val, new_g


def _solve(score, log_r, log_c, reg, tol, max_iter):
    """Potentials ``f, g`` with ``exp(reg*score + f + g)`` in U(r, c)."""
    kern = _kernels.active()
    g = np.zeros(score.shape[1])
    f = np.zeros(score.shape[0])
    used = 0
    lam = min(1.0, reg)
    while lam < reg and used < max_iter:
        logk = lam * score
        f, g, it, viol = kern.sinkhorn_log(logk, log_r, log_c, _STAGE_TOL,
                                           min(_STAGE_SWEEPS, max_iter - used), g)
        used += it
        nxt = min(2.0 * lam, reg)
        f, g = f * (nxt / lam), g * (nxt / lam)
        lam = nxt

    logk = np.ascontiguousarray(reg * score)
    viol = np.inf
    newton_ok = True
    while used < max_iter:
        budget = max_iter - used
        if newton_ok and viol <= _NEWTON_SWITCH:
            f, g, steps, viol, newton_ok = _newton(logk, log_r, log_c, f, tol, budget)
            used += steps
            if viol <= tol:
                break
            continue
        f, g, it, viol = kern.sinkhorn_log(logk, log_r, log_c, tol,
                                           min(_STAGE_SWEEPS, budget), g)
        used += it
        if viol <= tol:
            break
    return logk, f, g, used


def _plan(score, r, c, params, scale):
    keep_r, keep_c = r > 0, c > 0
    sub = np.ascontiguousarray(score[np.ix_(keep_r, keep_c)])
    log_r, log_c = np.log(r[keep_r]), np.log(c[keep_c])
    logk, f, g, used = _solve(sub, log_r, log_c, params.reg, params.tol, params.max_iter)
    plan = np.zeros_like(score)
    plan[np.ix_(keep_r, keep_c)] = np.exp(logk + f[:, None] + g[None, :])
    viol = float(max(np.abs(plan.sum(axis=1) - r).max(), np.abs(plan.sum(axis=0) - c).max()))
    converged = viol <= params.tol
    if not converged:
        log.warning("entropic OT stopped after %d iterations with violation %.3g", used, viol)
    return TransportPlan(plan, r, c, converged, used, viol, scale)


def _scale_of(m, enabled):
    s = float(np.abs(m).max()) if m.size else 0.0
    return s if enabled and s > 0 else 1.0


def sinkhorn_plan(cost, r, c, params=LotParams()):
    """Entropic OT plan between marginals ``r`` and ``c`` for ``cost``."""
    cost = as_matrix(cost, "cost")
    r = np.asarray(r, dtype=np.float64).ravel()
    c = np.asarray(c, dtype=np.float64).ravel()
    if cost.shape != (r.size, c.size):
        raise ShapeError(f"cost {cost.shape} does not match marginals ({r.size}, {c.size})")
    if (r < 0).any() or (c < 0).any():
        raise DomainError("marginals must be nonnegative")
    mass_r, mass_c = r.sum(), c.sum()
    if abs(mass_r - mass_c) > 1e-8 * max(mass_r, mass_c) or mass_r <= 0:
        raise DomainError(f"marginal masses differ: {mass_r!r} vs {mass_c!r}")
    scale = _scale_of(cost, params.scale)
    return _plan(-cost / scale, r, c, params, scale)


def lot_plan(profit, params=LotParams()):
    """Doubly stochastic entropic maximiser of ``<Q, profit>``, with metadata."""
    profit = as_square(profit, "profit")
    n = profit.shape[0]
    scale = _scale_of(profit, params.scale)
    ones = np.ones(n)
    return _plan(profit / scale, ones, ones, params, scale)


def lot(profit, params=LotParams()):
    """Doubly stochastic step direction for ``profit`` (see :func:`lot_plan`)."""
    return lot_plan(profit, params).plan
