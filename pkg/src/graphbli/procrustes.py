"""Orthogonal Procrustes mapping and nearest-neighbour / CSLS retrieval."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .numeric import as_matrix

CSLS_K = 10
METHODS = ("cosine", "csls")


@dataclass(frozen=True)
class OrthogonalMap:
    """Row-vector map ``x -> x @ w`` with ``w`` orthogonal."""

    w: np.ndarray

    def apply(self, x):
        return as_matrix(x, "x") @ self.w

    def orthogonality_error(self):
        d = self.w.shape[0]
        return float(np.linalg.norm(self.w.T @ self.w - np.eye(d)))

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d))


@dataclass
class RetrievalResult:
    """Ranked targets per source row.

    ``indices[i]`` lists candidate target rows (into the full target matrix)
    best first and ``scores[i]`` their scores, nonincreasing.
    """

    indices: np.ndarray
    scores: np.ndarray
    method: str
    k: int | None = None

    def best(self):
        return self.indices[:, 0]


def fit_orthogonal(xbar, ybar):
    """Orthogonal ``W`` minimising ``||xbar @ W - ybar||_F``.

    With ``ybar.T @ xbar = U S V^T`` the optimum is ``W = V U^T``. The
    determinant is not constrained, reflections are allowed.

    Parameters
    ----------
    xbar, ybar : (s, d) arrays
        Seed rows, pair ``i`` being ``(xbar[i], ybar[i])``.
    """
    xbar = as_matrix(xbar, "xbar")
    ybar = as_matrix(ybar, "ybar")
    if xbar.shape[1] != ybar.shape[1]:
        raise ShapeError(f"dimension mismatch: {xbar.shape[1]} vs {ybar.shape[1]}")
    if xbar.shape[0] != ybar.shape[0]:
        raise ShapeError(f"seed count mismatch: {xbar.shape[0]} vs {ybar.shape[0]}")
    if xbar.shape[0] == 0:
        raise DomainError("Procrustes needs at least one seed pair")
    u, _, vt = np.linalg.svd(ybar.T @ xbar)
    return OrthogonalMap(vt.T @ u.T)


def _unit_rows(m):
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return np.divide(m, norms, out=np.zeros_like(m), where=norms > 0)


def _mean_topk(sim, k):
    """Mean of the ``k`` largest entries of each row."""
    part = np.partition(sim, sim.shape[1] - k, axis=1)[:, -k:]
    return part.mean(axis=1)


def _rank(scores, top):
    # stable sort on the negated scores keeps lower indices first on ties
    order = np.argsort(-scores, axis=1, kind="stable")[:, :top]
    return order, np.take_along_axis(scores, order, axis=1)


def _scores(mapped_x, y, method, k):
    xs, ys = _unit_rows(mapped_x), _unit_rows(y)
    cos = xs @ ys.T
    if method == "cosine":
        return cos
    if not 1 <= k < min(xs.shape[0], ys.shape[0]):
        raise DomainError(f"CSLS needs 1 <= k < rows on each side, got k={k} "
                          f"for {xs.shape[0]} x {ys.shape[0]}")
    r_y = _mean_topk(cos, k)
    r_x = _mean_topk(cos.T, k)
    return 2.0 * cos - r_y[:, None] - r_x[None, :]


def csls_scores(mapped_x, y, k=CSLS_K, top=None):
    """Rank ``y`` rows for each ``mapped_x`` row by CSLS.

    ``CSLS(x, y) = 2 cos(x, y) - r_Y(x) - r_X(y)`` where ``r_Y(x)`` is the
    mean cosine of ``x`` to its ``k`` nearest targets and ``r_X(y)`` the
    mean cosine of ``y`` to its ``k`` nearest sources.
    """
    mapped_x = as_matrix(mapped_x, "mapped_x")
    y = as_matrix(y, "y")
    _check_dims(mapped_x, y)
    s = _scores(mapped_x, y, "csls", k)
    idx, sc = _rank(s, top or y.shape[0])
    return RetrievalResult(idx, sc, "csls", k)


def _check_dims(x, y):
    if x.shape[1] != y.shape[1]:
        raise ShapeError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")


def translate(x, omap, y, method="csls", k=CSLS_K, candidates=None, top=None):
    """Map ``x`` through ``omap`` and rank targets by cosine or CSLS.

    Parameters
    ----------
    candidates : sequence of int, optional
        Restrict retrieval (and the CSLS neighbourhoods) to these rows of
        ``y``. Returned indices still refer to rows of ``y``.
    top : int, optional
        Keep only the best ``top`` candidates per source row.
    """
    if method not in METHODS:
        raise DomainError(f"unknown retrieval method {method!r}")
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    _check_dims(x, y)
    if x.shape[1] != omap.w.shape[0]:
        raise ShapeError("map does not match embedding dimension")
    cand = np.arange(y.shape[0]) if candidates is None else np.asarray(candidates, dtype=np.int64)
    if cand.size == 0:
        raise DomainError("empty candidate set")
    scores = _scores(omap.apply(x), y[cand], method, k)
    idx, sc = _rank(scores, min(top or cand.size, cand.size))
    return RetrievalResult(cand[idx], sc, method, k if method == "csls" else None)
