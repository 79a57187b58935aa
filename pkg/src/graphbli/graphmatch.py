"""Frank-Wolfe graph matching: FAQ / seeded FAQ (SGM) and GOAT.

Both solvers maximise ``f(P) = trace(gx.T @ P @ gy @ P.T)`` over doubly
stochastic ``P`` and project the relaxed optimum to a permutation. They
differ only in the step direction: FAQ takes the linear-assignment
maximiser of the gradient, GOAT the entropic-OT (LOT) maximiser.

Seeds are the first ``num_seeds`` vertices of both graphs, matched to each
other (use :func:`seeded_align` to bring arbitrary seed pairs into this
form). The default ``"clamped"`` gradient mode runs the loop on full
``n x n`` matrices with the seed block fixed at the identity; the
``"partitioned"`` mode works on the non-seed block only and folds the
seed/non-seed cross terms into a constant linear term. The two modes are
algebraically identical.
"""

import base64
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ShapeError, ValidationError
from .lap import solve_lap_max
from .numeric import (as_square, barycenter, check_doubly_stochastic,
                      marginal_violation, _check_trio, _qap)
from .sinkhorn import LotParams, lot_plan, sinkhorn_plan

log = logging.getLogger(__name__)

HUNGARIAN = "hungarian"


@dataclass(eq=False)
class MatchProblem:
    """A seeded graph-matching instance.

    ``init`` is ``"barycenter"``, ``"random"`` (Sinkhorn-balanced uniform
    noise drawn from ``init_seed``) or an explicit doubly stochastic matrix
    over the non-seed block. ``step_solver`` is ``"hungarian"`` for FAQ/SGM
    or a :class:`LotParams` for GOAT.
    """

    gx: np.ndarray
    gy: np.ndarray
    num_seeds: int = 0
    init: object = "barycenter"
    init_seed: int | None = None
    step_solver: object = HUNGARIAN
    max_iter: int = 30
    tol: float = 1e-3
    gradient_mode: str = "clamped"
    # aligned index -> original vertex (-1 marks padding); filled by seeded_align
    src_order: np.ndarray | None = None
    tgt_order: np.ndarray | None = None
    padded: bool = False

    def __post_init__(self):
        self.gx = as_square(self.gx, "gx")
        self.gy = as_square(self.gy, "gy")
        if self.gx.shape != self.gy.shape:
            raise ShapeError(f"graphs differ in size: {self.gx.shape} vs {self.gy.shape}; "
                             "use seeded_align to pad")
        n = self.gx.shape[0]
        if not 0 <= self.num_seeds <= n:
            raise ValidationError(f"num_seeds={self.num_seeds} outside 0..{n}")
        if self.max_iter < 1 or not self.tol > 0:
            raise ValidationError("max_iter must be >= 1 and tol > 0")
        if self.gradient_mode not in ("clamped", "partitioned"):
            raise ValidationError(f"unknown gradient_mode {self.gradient_mode!r}")
        if not (self.step_solver == HUNGARIAN or isinstance(self.step_solver, LotParams)):
            raise ValidationError("step_solver must be 'hungarian' or LotParams")

    @property
    def n(self):
        return self.gx.shape[0]


@dataclass(eq=False)
class MatchResult:
    permutation: np.ndarray
    objective_trajectory: list
    iterations: int
    converged: bool
    final_relaxed: np.ndarray
    step_sizes: list = field(default_factory=list)
    lot_unconverged: int = 0

    def serialize(self):
        """Canonical byte encoding; equal bytes mean bit-identical results."""
        doc = {
            "permutation": self.permutation.tolist(),
            "objective_trajectory": [float(v).hex() for v in self.objective_trajectory],
            "step_sizes": [float(v).hex() for v in self.step_sizes],
            "iterations": self.iterations,
            "converged": self.converged,
            "lot_unconverged": self.lot_unconverged,
            "final_relaxed": base64.b64encode(
                np.ascontiguousarray(self.final_relaxed, dtype="<f8").tobytes()).decode(),
        }
        return json.dumps(doc, sort_keys=True).encode()

    def original_mapping(self, problem):
        """Match in original vertex ids: ``out[i]`` is the ``gy`` vertex for
        ``gx`` vertex ``i``, or -1 when ``i`` was matched to padding."""
        if problem.src_order is None:
            return self.permutation.copy()
        n_src = int((problem.src_order >= 0).sum())
        out = np.full(n_src, -1, dtype=np.int64)
        for a, b in enumerate(self.permutation):
            src = problem.src_order[a]
            if src >= 0:
                out[src] = problem.tgt_order[b]
        return out


def gradient(gx, gy, p):
    """``gx @ p @ gy.T + gx.T @ p @ gy``."""
    gx, gy, p = _check_trio(gx, gy, p)
    return gx @ p @ gy.T + gx.T @ p @ gy


def _best_alpha(a, b, c):
    """Maximiser of ``a t^2 + b t + c`` on [0, 1]; ties go to ``t = 1``."""
    f0, f1 = c, a + b + c
    alpha, best = (1.0, f1) if f1 >= f0 else (0.0, f0)
    if a < 0:
        t = -b / (2.0 * a)
        if 0.0 <= t <= 1.0:
            ft = (a * t + b) * t + c
            if ft > best:
                alpha, best = t, ft
    return alpha, best


def line_search_coefficients(gx, gy, p, q):
    """``(a, b, c)`` with ``f(alpha p + (1 - alpha) q) = a alpha^2 + b alpha + c``."""
    gx, gy, p = _check_trio(gx, gy, p)
    q = as_square(q, "q")
    if q.shape != p.shape:
        raise ShapeError(f"q {q.shape} does not match p {p.shape}")
    d = p - q
    md = gx.T @ d @ gy
    mq = gx.T @ q @ gy
    return float(np.vdot(md, d)), float(np.vdot(md, q) + np.vdot(mq, d)), float(np.vdot(mq, q))


def line_search_alpha(gx, gy, p, q):
    """Exact step ``argmax_{alpha in [0,1]} f(alpha p + (1 - alpha) q)``."""
    return _best_alpha(*line_search_coefficients(gx, gy, p, q))[0]


class _Model:
    """``F(X) = c0 + <lin, X> + trace(a.T X b X.T)`` with the first ``fixed``
    rows/columns of ``X`` clamped to the identity."""

    def __init__(self, a, b, lin, c0, fixed):
        self.a, self.b, self.lin, self.c0, self.fixed = a, b, lin, c0, fixed
        self.sym = np.array_equal(a, a.T) and np.array_equal(b, b.T)

    def embed(self, block):
        s = self.fixed
        if s == 0:
            return block
        k = s + block.shape[0]
        x = np.zeros((k, k))
        x[:s, :s] = np.eye(s)
        x[s:, s:] = block
        return x

    def free(self, x):
        return x[self.fixed:, self.fixed:]

    def quad(self, x):
        """``a.T @ x @ b`` (reused by the gradient and the line search)."""
        return self.a.T @ x @ self.b

    def objective(self, x, mx=None):
        mx = self.quad(x) if mx is None else mx
        val = np.vdot(mx, x)
        if self.lin is not None:
            val += np.vdot(self.lin, x)
        return float(self.c0 + val)

    def gradient(self, x, mx):
        g = 2.0 * mx if self.sym else self.a @ x @ self.b.T + mx
        if self.lin is not None:
            g = g + self.lin
        return g


def _model_for(problem):
    s, gx, gy = problem.num_seeds, problem.gx, problem.gy
    if problem.gradient_mode == "clamped" or s == 0:
        return _Model(gx, gy, None, 0.0, s)
    a11, a12, a21, a22 = gx[:s, :s], gx[:s, s:], gx[s:, :s], gx[s:, s:]
    b11, b12, b21, b22 = gy[:s, :s], gy[:s, s:], gy[s:, :s], gy[s:, s:]
    lin = a21 @ b21.T + a12.T @ b12
    return _Model(np.ascontiguousarray(a22), np.ascontiguousarray(b22), lin,
                  float(np.vdot(a11, b11)), 0)


def random_doubly_stochastic(n, seed=None):
    """Sinkhorn balancing of an iid U(0, 1) matrix."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=(n, n))
    ones = np.ones(n)
    return sinkhorn_plan(-np.log(u), ones, ones,
                         LotParams(reg=1.0, tol=1e-12, max_iter=10000, scale=False)).plan


def _initial_block(problem):
    m = problem.n - problem.num_seeds
    init = problem.init
    if isinstance(init, str):
        if init == "barycenter":
            return barycenter(m)
        if init == "random":
            return random_doubly_stochastic(m, problem.init_seed)
        raise ValidationError(f"unknown init {init!r}")
    p0 = as_square(init, "init")
    if p0.shape != (m, m):
        raise ValidationError(f"init must be {m}x{m} (non-seed block), got {p0.shape}")
    return check_doubly_stochastic(p0, name="init")


def _direction(grad_block, solver):
    if solver == HUNGARIAN:
        perm = solve_lap_max(grad_block).permutation
        q = np.zeros_like(grad_block)
        q[np.arange(len(perm)), perm] = 1.0
        return q, True
    tp = lot_plan(grad_block, solver)
    return tp.plan, tp.converged


def _frank_wolfe(problem, trace=None, strict=False):
    n, s = problem.n, problem.num_seeds
    m = n - s
    if m == 0:
        eye = np.eye(n)
        f = _qap(problem.gx, problem.gy, eye)
        return MatchResult(np.arange(n, dtype=np.int64), [f], 0, True, eye)

    model = _model_for(problem)
    x = model.embed(_initial_block(problem))
    mx = model.quad(x)
    f = model.objective(x, mx)
    trajectory, steps = [f], []
    converged = False
    unconverged = 0
    it = 0
    for it in range(1, problem.max_iter + 1):
        grad = model.gradient(x, mx)
        q_block, ok = _direction(np.ascontiguousarray(model.free(grad)), problem.step_solver)
        if not ok:
            unconverged += 1
            if strict:
                raise NumericalError(f"LOT did not converge at iteration {it}")
        q = model.embed(q_block)
        mq = model.quad(q)
        d = x - q
        md = mx - mq
        a = float(np.vdot(md, d))
        b = float(np.vdot(md, q) + np.vdot(mq, d))
        if model.lin is not None:
            b += float(np.vdot(model.lin, d))
        c = model.objective(q, mq)
        alpha, f = _best_alpha(a, b, c)
        x_new = alpha * x + (1.0 - alpha) * q
        mx = alpha * mx + (1.0 - alpha) * mq
        change = (1.0 - alpha) * np.sqrt(np.vdot(d, d)) / n
        x = x_new
        trajectory.append(f)
        steps.append(alpha)
        if trace is not None:
            viol = marginal_violation(model.free(x))
            trace.write(f"iter={it} f={f:.10g} alpha={alpha:.10g} viol={viol:.3g}\n")
        log.debug("iter %d f=%.10g alpha=%.6g change=%.3g", it, f, alpha, change)
        if change < problem.tol:
            converged = True
            break

    relaxed = model.free(x)
    perm_block = solve_lap_max(relaxed).permutation
    perm = np.concatenate([np.arange(s, dtype=np.int64), s + perm_block])
    return MatchResult(perm, trajectory, it, converged, model.embed(relaxed) if s else relaxed.copy(),
                       steps, unconverged)


def faq(problem, trace=None):
    """FAQ / SGM: Frank-Wolfe with linear-assignment step directions."""
    if problem.step_solver != HUNGARIAN:
        raise ValidationError("faq needs step_solver='hungarian'")
    return _frank_wolfe(problem, trace)


def goat(problem, trace=None, strict=False):
    """GOAT: Frank-Wolfe with doubly stochastic entropic-OT step directions.

    With ``strict`` a step direction that misses the LOT tolerance raises
    :class:`NumericalError` instead of being counted in ``lot_unconverged``.
    """
    if not isinstance(problem.step_solver, LotParams):
        raise ValidationError("goat needs step_solver=LotParams(...)")
    return _frank_wolfe(problem, trace, strict)


def solve(problem, trace=None, strict=False):
    """Dispatch on ``problem.step_solver``."""
    if problem.step_solver == HUNGARIAN:
        return faq(problem, trace)
    return goat(problem, trace, strict)


def seeded_align(gx, gy, seed_pairs=(), **options):
    """Reorder (and pad) two graphs so seed pair ``i`` sits at index ``i`` on both sides.

    Non-seed vertices follow in their original relative order. When the
    graphs differ in size the smaller one is padded with isolated vertices,
    which come after all real vertices. Remaining keyword arguments are
    passed to :class:`MatchProblem`.
    """
    gx = as_square(gx, "gx")
    gy = as_square(gy, "gy")
    pairs = np.asarray(list(seed_pairs), dtype=np.int64).reshape(-1, 2)
    nx, ny = gx.shape[0], gy.shape[0]
    src, tgt = pairs[:, 0], pairs[:, 1]
    if len(set(src.tolist())) != len(src) or len(set(tgt.tolist())) != len(tgt):
        raise ValidationError("a vertex appears in more than one seed pair")
    if len(src) and (src.min() < 0 or src.max() >= nx or tgt.min() < 0 or tgt.max() >= ny):
        raise ValidationError("seed pair references a vertex outside the graph")

    n = max(nx, ny)
    src_order = np.concatenate([src, np.setdiff1d(np.arange(nx), src, assume_unique=True),
                                np.full(n - nx, -1, dtype=np.int64)])
    tgt_order = np.concatenate([tgt, np.setdiff1d(np.arange(ny), tgt, assume_unique=True),
                                np.full(n - ny, -1, dtype=np.int64)])

    def reorder(g, order):
        out = np.zeros((n, n))
        real = np.flatnonzero(order >= 0)
        out[np.ix_(real, real)] = g[np.ix_(order[real], order[real])]
        return out

    return MatchProblem(reorder(gx, src_order), reorder(gy, tgt_order), num_seeds=len(src),
                        src_order=src_order, tgt_order=tgt_order, padded=nx != ny, **options)
